/** Admin report view: per-class table plus two bar panels, one for the
 * average number of relevant tags (axis capped at k) and one for the
 * zero-relevant video counts (axis capped at the class video count max). */

import { Report, fetchReport } from "./api.js";

export class ReportView {
  readonly root: HTMLElement;
  private load: () => Promise<Report>;

  constructor(root: HTMLElement, load: () => Promise<Report> = fetchReport) {
    this.root = root;
    this.load = load;
  }

  async start(): Promise<void> {
    let report: Report;
    try {
      report = await this.load();
    } catch (err) {
      this.root.replaceChildren(text("div", "banner", `could not load report: ${err}`));
      return;
    }
    this.render(report);
  }

  render(report: Report): void {
    this.root.replaceChildren();
    if (report.classes.length === 0) {
      this.root.appendChild(text("div", "status empty", "no marks collected yet"));
      return;
    }
    this.root.appendChild(
      text(
        "div",
        "summary",
        `overall ${report.overall_avg.toFixed(2)} of ${report.k} tags relevant; ` +
          `${report.total_zero_videos} of ${report.video_count} videos with none ` +
          `(${report.mark_count} marks)`
      )
    );

    const table = document.createElement("table");
    table.className = "report-table";
    const head = table.insertRow();
    for (const label of ["class", "videos", "avg relevant", "zero relevant"]) {
      head.appendChild(text("th", "", label));
    }
    for (const row of report.classes) {
      const tr = table.insertRow();
      tr.insertCell().textContent = row.class_stem;
      tr.insertCell().textContent = String(row.video_count);
      tr.insertCell().textContent = row.avg_relevant.toFixed(2);
      tr.insertCell().textContent = String(row.zero_relevant_videos);
    }
    this.root.appendChild(table);

    this.root.appendChild(
      this.barPanel("avg-relevant", "average relevant tags per class",
                    report.classes.map((c) => ({ label: c.class_stem, value: c.avg_relevant })),
                    report.k)
    );
    const maxVideos = Math.max(1, ...report.classes.map((c) => c.video_count));
    this.root.appendChild(
      this.barPanel("zero-relevant", "videos with no relevant tag per class",
                    report.classes.map((c) => ({
                      label: c.class_stem,
                      value: c.zero_relevant_videos,
                    })),
                    maxVideos)
    );
  }

  private barPanel(
    id: string,
    title: string,
    rows: { label: string; value: number }[],
    axisMax: number
  ): HTMLElement {
    const panel = document.createElement("div");
    panel.className = "panel";
    panel.id = id;
    panel.dataset.axisMax = String(axisMax);
    panel.appendChild(text("h2", "", title));
    const bars = document.createElement("div");
    bars.className = "bars";
    for (const row of rows) {
      const column = document.createElement("div");
      column.className = "column";
      const bar = document.createElement("div");
      bar.className = "bar";
      bar.dataset.value = String(row.value);
      bar.style.height = `${(100 * row.value) / axisMax}%`;
      column.appendChild(bar);
      column.appendChild(text("div", "label", row.label));
      bars.appendChild(column);
    }
    panel.appendChild(bars);
    return panel;
  }
}

function text(tag: string, className: string, content: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  node.textContent = content;
  return node;
}
