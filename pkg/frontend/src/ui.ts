/** DOM rendering for the survey view: clip player with pause/replay,
 * toggleable tag chips in rank order, submit, and progress/banner. */

import { MarkResult, NextResult, fetchNext, postMark } from "./api.js";
import { SessionState } from "./state.js";

export interface SurveyDeps {
  next: (user: string) => Promise<NextResult>;
  mark: (req: ReturnType<SessionState["beginSubmit"]>) => Promise<MarkResult>;
}

const defaultDeps: SurveyDeps = { next: fetchNext, mark: postMark };

export class SurveyView {
  readonly root: HTMLElement;
  readonly state: SessionState;
  private deps: SurveyDeps;

  constructor(root: HTMLElement, state: SessionState, deps: SurveyDeps = defaultDeps) {
    this.root = root;
    this.state = state;
    this.deps = deps;
  }

  async start(): Promise<void> {
    await this.loadNext();
  }

  async loadNext(): Promise<void> {
    this.render();
    let result: NextResult;
    try {
      result = await this.deps.next(this.state.userId);
    } catch (err) {
      this.state.requestFailed(`could not reach the service: ${err}`);
      this.render();
      return;
    }
    if (result.done) {
      this.state.queueExhausted(result.progress);
    } else {
      this.state.taskLoaded(result.task);
    }
    this.render();
  }

  async submit(): Promise<void> {
    if (!this.state.canSubmit()) {
      return;
    }
    const payload = this.state.beginSubmit();
    this.render();
    let result: MarkResult;
    try {
      result = await this.deps.mark(payload);
    } catch (err) {
      this.state.submitRejected(`could not reach the service: ${err}`);
      this.render();
      return;
    }
    if (result.status === "accepted") {
      this.state.submitAccepted();
      await this.loadNext();
    } else {
      this.state.submitRejected(result.reason);
      this.render();
    }
  }

  render(): void {
    const s = this.state;
    this.root.replaceChildren();
    if (s.banner) {
      const banner = el("div", "banner");
      banner.textContent = s.banner;
      const retry = el("button", "retry") as HTMLButtonElement;
      retry.textContent = "retry";
      retry.addEventListener("click", () => {
        if (s.phase === "error") {
          s.phase = "loading";
          void this.loadNext();
        }
      });
      if (s.phase === "error") {
        banner.appendChild(retry);
      }
      this.root.appendChild(banner);
    }
    if (s.phase === "loading") {
      this.root.appendChild(text("div", "status", "loading next clip..."));
      return;
    }
    if (s.phase === "done") {
      this.root.appendChild(
        text("div", "status done",
             `all done: ${s.progress.marked} of ${s.progress.total} clips marked`)
      );
      return;
    }
    if (s.phase === "error") {
      return;
    }
    const task = s.task!;
    this.root.appendChild(
      text("div", "progress", `clip ${s.progress.marked + 1} of ${s.progress.total}`)
    );

    const video = el("video", "clip") as HTMLVideoElement;
    video.src = task.mediaUrl;
    video.loop = false;
    this.root.appendChild(video);
    const controls = el("div", "controls");
    const pause = text("button", "pause", "pause") as HTMLButtonElement;
    pause.addEventListener("click", () => video.pause());
    const replay = text("button", "replay", "replay") as HTMLButtonElement;
    replay.addEventListener("click", () => {
      video.currentTime = 0;
      void video.play();
    });
    controls.append(pause, replay);
    this.root.appendChild(controls);

    const chips = el("div", "chips");
    for (const suggestion of task.suggestions) {
      const chip = el("button", "chip") as HTMLButtonElement;
      chip.dataset.stem = suggestion.stem;
      chip.dataset.rank = String(suggestion.rank);
      chip.textContent = suggestion.surface;
      if (s.selected.has(suggestion.stem)) {
        chip.classList.add("selected");
      }
      chip.disabled = s.phase !== "marking";
      chip.addEventListener("click", () => {
        s.toggle(suggestion.stem);
        this.render();
      });
      chips.appendChild(chip);
    }
    this.root.appendChild(chips);

    const submit = el("button", "submit") as HTMLButtonElement;
    submit.textContent =
      s.phase === "submitting" ? "submitting..." : `submit ${s.selected.size} selected`;
    submit.disabled = !s.canSubmit();
    submit.addEventListener("click", () => void this.submit());
    this.root.appendChild(submit);
  }
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}

function text(tag: string, className: string, content: string): HTMLElement {
  const node = el(tag, className);
  node.textContent = content;
  return node;
}
