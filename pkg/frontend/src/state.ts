/** Survey session state machine.
 *
 * Phases: loading -> marking -> submitting -> (marking | loading | done),
 * with an error phase that keeps the last task and selection intact so a
 * retry loses nothing.  Submission is only possible while marking, and
 * the submitted `shown` list is always the exact served suggestion order.
 */

import { MarkRequest, Progress, VideoTask } from "./api.js";

export type Phase = "loading" | "marking" | "submitting" | "done" | "error";

export class SessionState {
  readonly userId: string;
  phase: Phase = "loading";
  task: VideoTask | null = null;
  selected = new Set<string>();
  progress: Progress = { marked: 0, total: 0 };
  banner: string | null = null;

  constructor(userId: string) {
    if (!userId) {
      throw new Error("user id must be non-empty");
    }
    this.userId = userId;
  }

  /** loading -> marking with a fresh task and empty selection. */
  taskLoaded(task: VideoTask): void {
    this.assertPhase("taskLoaded", "loading");
    this.task = task;
    this.selected = new Set();
    this.progress = task.progress;
    this.banner = null;
    this.phase = "marking";
  }

  /** loading -> done once the queue is exhausted. */
  queueExhausted(progress: Progress): void {
    this.assertPhase("queueExhausted", "loading");
    this.task = null;
    this.progress = progress;
    this.phase = "done";
  }

  /** Any fetch failure: selections are preserved for retry. */
  requestFailed(message: string): void {
    this.banner = message;
    this.phase = this.task === null ? "error" : "marking";
  }

  toggle(stem: string): void {
    this.assertPhase("toggle", "marking");
    const shown = this.shownStems();
    if (!shown.includes(stem)) {
      throw new Error(`stem ${stem} was never shown`);
    }
    if (this.selected.has(stem)) {
      this.selected.delete(stem);
    } else {
      this.selected.add(stem);
    }
  }

  /** marking -> submitting; the payload's shown list is the served order. */
  beginSubmit(): MarkRequest {
    this.assertPhase("beginSubmit", "marking");
    const task = this.task!;
    this.phase = "submitting";
    const shown = this.shownStems();
    return {
      video_id: task.videoId,
      user_id: this.userId,
      shown,
      selected: shown.filter((s) => this.selected.has(s)),
    };
  }

  /** submitting -> loading (advance to the next clip). */
  submitAccepted(): void {
    this.assertPhase("submitAccepted", "submitting");
    this.task = null;
    this.selected = new Set();
    this.banner = null;
    this.phase = "loading";
  }

  /** submitting -> marking: show the reason, keep the selection. */
  submitRejected(reason: string): void {
    this.assertPhase("submitRejected", "submitting");
    this.banner = reason;
    this.phase = "marking";
  }

  canSubmit(): boolean {
    return this.phase === "marking";
  }

  shownStems(): string[] {
    return (this.task?.suggestions ?? []).map((s) => s.stem);
  }

  private assertPhase(action: string, expected: Phase): void {
    if (this.phase !== expected) {
      throw new Error(`${action} is invalid in phase ${this.phase}`);
    }
  }
}
