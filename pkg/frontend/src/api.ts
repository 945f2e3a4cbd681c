/** Typed client for the three survey-service endpoints. */

export interface Suggestion {
  rank: number;
  surface: string;
  stem: string;
}

export interface Progress {
  marked: number;
  total: number;
}

export interface VideoTask {
  videoId: string;
  mediaUrl: string;
  suggestions: Suggestion[];
  progress: Progress;
}

export type NextResult = { done: true; progress: Progress } | { done: false; task: VideoTask };

export interface MarkRequest {
  video_id: string;
  user_id: string;
  shown: string[];
  selected: string[];
}

export type MarkResult = { status: "accepted" } | { status: "rejected"; reason: string };

export interface ClassRow {
  class_stem: string;
  video_count: number;
  avg_relevant: number;
  zero_relevant_videos: number;
}

export interface Report {
  k: number;
  classes: ClassRow[];
  overall_avg: number;
  total_zero_videos: number;
  mark_count: number;
  video_count: number;
  typical_tags_per_video_reference: number;
}

async function asJson(response: Response): Promise<any> {
  if (!response.ok) {
    throw new Error(`service error: ${response.status} ${response.statusText}`);
  }
  return response.json();
}

export async function fetchNext(user: string, base = ""): Promise<NextResult> {
  const doc = await asJson(await fetch(`${base}/api/next?user=${encodeURIComponent(user)}`));
  const progress: Progress = doc.progress ?? { marked: 0, total: 0 };
  if (doc.done) {
    return { done: true, progress };
  }
  return {
    done: false,
    task: {
      videoId: doc.video_id,
      mediaUrl: doc.media_url,
      suggestions: doc.suggestions as Suggestion[],
      progress,
    },
  };
}

export async function postMark(mark: MarkRequest, base = ""): Promise<MarkResult> {
  const response = await fetch(`${base}/api/mark`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(mark),
  });
  return asJson(response);
}

export async function fetchReport(base = ""): Promise<Report> {
  return asJson(await fetch(`${base}/api/report`));
}
