import { ReportView } from "./report.js";
import { SessionState } from "./state.js";
import { SurveyView } from "./ui.js";

function userIdFromLocation(): string {
  const params = new URLSearchParams(window.location.search);
  const fromQuery = params.get("user");
  if (fromQuery) {
    window.localStorage.setItem("tagforge-user", fromQuery);
    return fromQuery;
  }
  let stored = window.localStorage.getItem("tagforge-user");
  if (!stored) {
    stored = `user-${Math.random().toString(36).slice(2, 10)}`;
    window.localStorage.setItem("tagforge-user", stored);
  }
  return stored;
}

function boot(): void {
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  if (window.location.hash === "#report") {
    void new ReportView(root).start();
  } else {
    void new SurveyView(root, new SessionState(userIdFromLocation())).start();
  }
}

window.addEventListener("hashchange", () => window.location.reload());
boot();
