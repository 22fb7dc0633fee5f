import type { CaseScenario, CaseSummary } from "../types.js";

export interface CaseSelectHandlers {
  onSelectCase(caseId: string): void;
  onSubmitDescription(description: string): void;
  onConfirmBespoke(caseId: string): void;
}

/**
 * Case catalog plus the bespoke entry form. Specialty filtering is a
 * pure client-side view filter; the extracted bespoke case is shown
 * for confirmation before any session starts.
 */
export function renderCaseSelect(
  doc: Document,
  cases: CaseSummary[],
  specialtyFilter: string,
  pendingBespoke: CaseScenario | null,
  handlers: CaseSelectHandlers,
): HTMLElement {
  const root = doc.createElement("div");
  root.className = "case-select-view";

  const filter = doc.createElement("select");
  filter.id = "specialty-filter";
  filter.setAttribute("aria-label", "Filter cases by specialty");
  const specialties = ["", ...new Set(cases.map((c) => c.specialty))];
  for (const specialty of specialties) {
    const option = doc.createElement("option");
    option.value = specialty;
    option.textContent = specialty || "All specialties";
    option.selected = specialty === specialtyFilter;
    filter.appendChild(option);
  }
  root.appendChild(filter);

  const list = doc.createElement("ul");
  list.className = "case-list";
  const visible = specialtyFilter
    ? cases.filter((c) => c.specialty === specialtyFilter)
    : cases;
  for (const summary of visible) {
    const li = doc.createElement("li");
    li.className = "case-item";
    li.dataset.caseId = summary.case_id;
    const button = doc.createElement("button");
    button.textContent = `${summary.specialty}: ${summary.summary}`;
    button.addEventListener("click", () => handlers.onSelectCase(summary.case_id));
    li.appendChild(button);
    list.appendChild(li);
  }
  root.appendChild(list);

  const form = doc.createElement("form");
  form.className = "bespoke-form";
  const textarea = doc.createElement("textarea");
  textarea.id = "bespoke-description";
  textarea.setAttribute("aria-label", "Describe your own case");
  textarea.placeholder = "Describe the situation, the error, and what the patient knows…";
  form.appendChild(textarea);
  const submit = doc.createElement("button");
  submit.type = "submit";
  submit.textContent = "Extract case";
  form.appendChild(submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (textarea.value.trim()) {
      handlers.onSubmitDescription(textarea.value.trim());
    }
  });
  root.appendChild(form);

  if (pendingBespoke) {
    const preview = doc.createElement("section");
    preview.className = "bespoke-preview";
    const title = doc.createElement("h3");
    title.textContent = "Review the extracted case";
    preview.appendChild(title);
    const fields: Array<[string, string]> = [
      ["Speaking with", pendingBespoke.interlocutor +
        (pendingBespoke.relationship ? ` (${pendingBespoke.relationship})` : "")],
      ["Profile", pendingBespoke.patient_profile],
      ["Situation", pendingBespoke.medical_situation],
      ["They currently know", pendingBespoke.patient_knowledge],
    ];
    const dl = doc.createElement("dl");
    for (const [label, value] of fields) {
      const dt = doc.createElement("dt");
      dt.textContent = label;
      const dd = doc.createElement("dd");
      dd.textContent = value;
      dl.appendChild(dt);
      dl.appendChild(dd);
    }
    preview.appendChild(dl);
    const confirm = doc.createElement("button");
    confirm.id = "confirm-bespoke-button";
    confirm.setAttribute("aria-label", "Start session with this case");
    confirm.textContent = "Looks right, start practicing";
    confirm.addEventListener("click", () => handlers.onConfirmBespoke(pendingBespoke.case_id));
    preview.appendChild(confirm);
    root.appendChild(preview);
  }

  return root;
}
