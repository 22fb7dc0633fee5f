import type { OverallFeedback } from "../types.js";

export interface ReportHandlers {
  onDownloadTranscript(): void;
}

export const AREA_ORDER: Array<[string, string]> = [
  ["acknowledgment_explanation", "Acknowledgment & Explanation"],
  ["emotional_support", "Emotional Support"],
  ["trust_accountability", "Trust & Accountability"],
  ["resolution", "Resolution"],
];

export function renderReport(
  doc: Document,
  overall: OverallFeedback,
  handlers: ReportHandlers,
): HTMLElement {
  const root = doc.createElement("div");
  root.className = "report-view";

  const header = doc.createElement("header");
  header.className = "report-header";
  const title = doc.createElement("h2");
  title.textContent = "Overall performance";
  header.appendChild(title);
  const score = doc.createElement("p");
  score.className = "overall-score";
  score.textContent =
    overall.overall_score_display !== null
      ? `${overall.overall_score_display} / 5`
      : "No scored turns";
  header.appendChild(score);
  const summary = doc.createElement("p");
  summary.className = "overall-text";
  summary.textContent = overall.overall_text;
  header.appendChild(summary);
  root.appendChild(header);

  const lists: Array<[string, string[], string]> = [
    ["Key strengths", overall.key_strengths, "key-strengths"],
    ["Areas for improvement", overall.key_improvements, "key-improvements"],
  ];
  for (const [heading, items, cls] of lists) {
    const section = doc.createElement("section");
    section.className = cls;
    const h = doc.createElement("h3");
    h.textContent = heading;
    section.appendChild(h);
    const ul = doc.createElement("ul");
    for (const item of items) {
      const li = doc.createElement("li");
      li.textContent = item;
      ul.appendChild(li);
    }
    section.appendChild(ul);
    root.appendChild(section);
  }

  const areas = doc.createElement("div");
  areas.className = "area-reports";
  for (const [key, label] of AREA_ORDER) {
    const report = overall.per_area[key];
    const section = doc.createElement("section");
    section.className = "area-report";
    section.dataset.area = key;
    const h = doc.createElement("h3");
    h.textContent = label;
    section.appendChild(h);
    if (!report.addressed) {
      const badge = doc.createElement("span");
      badge.className = "badge badge-not-addressed";
      badge.textContent = "Not addressed";
      section.appendChild(badge);
    } else {
      const areaScore = doc.createElement("p");
      areaScore.className = "area-score";
      areaScore.textContent = `${report.score_display} / 5`;
      section.appendChild(areaScore);
      const assessment = doc.createElement("p");
      assessment.className = "area-assessment";
      assessment.textContent = report.assessment;
      section.appendChild(assessment);
      for (const [cls, items] of [
        ["area-strengths", report.strengths],
        ["area-improvements", report.improvements],
        ["area-examples", report.examples],
      ] as Array<[string, string[]]>) {
        if (!items.length) continue;
        const ul = doc.createElement("ul");
        ul.className = cls;
        for (const item of items) {
          const li = doc.createElement("li");
          li.textContent = item;
          ul.appendChild(li);
        }
        section.appendChild(ul);
      }
    }
    areas.appendChild(section);
  }
  root.appendChild(areas);

  const download = doc.createElement("button");
  download.id = "download-transcript-button";
  download.setAttribute("aria-label", "Download session transcript");
  download.textContent = "Download transcript";
  download.addEventListener("click", () => handlers.onDownloadTranscript());
  root.appendChild(download);

  return root;
}
