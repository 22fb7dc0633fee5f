import { ApiClient, ApiError } from "./api.js";
import { MIC_RATIONALE, MediaRecorderAdapter, Recorder } from "./recorder.js";
import { SessionStore } from "./store.js";
import type { CaseScenario, CaseSummary } from "./types.js";
import { renderCaseSelect } from "./views/caseSelect.js";
import { renderConversation } from "./views/conversation.js";
import { renderReport } from "./views/report.js";

export class App {
  private cases: CaseSummary[] = [];
  private specialtyFilter = "";
  private pendingBespoke: CaseScenario | null = null;
  private closeStream: (() => void) | null = null;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    readonly store: SessionStore = new SessionStore(),
    private recorder: Recorder = new MediaRecorderAdapter(),
  ) {
    store.subscribe(() => this.render());
  }

  async start(): Promise<void> {
    this.cases = await this.api.listCases();
    this.store.goTo("case_select");
  }

  private async beginSession(caseId: string): Promise<void> {
    const sessionId = await this.api.createSession(caseId, { feedback_mode: "both" });
    this.closeStream = this.api.subscribeEvents(sessionId, (event) =>
      this.store.ingest(event),
    );
    this.store.startSession(sessionId, "both");
  }

  private async pressRecord(): Promise<void> {
    if (this.store.turnInFlight || this.store.ended) return;
    try {
      await this.recorder.start();
      this.store.setRecording("recording");
    } catch {
      this.store.showToast("Microphone unavailable. Check browser permissions.");
    }
  }

  private async releaseRecord(): Promise<void> {
    if (this.store.recording !== "recording") return;
    this.store.setRecording("uploading");
    const audio = await this.recorder.stop();
    const key = `turn-${this.store.turns.length}-${Date.now()}`;
    await this.submitAudio(audio, key);
  }

  private async submitAudio(audio: Blob, idempotencyKey: string): Promise<void> {
    try {
      await this.api.submitAudioTurn(this.store.sessionId, audio, idempotencyKey);
    } catch (error) {
      this.store.setRecording("idle");
      const message =
        error instanceof ApiError && error.status === 503
          ? "The simulation service is briefly unavailable."
          : "Could not send your turn.";
      // non-blocking: transcript stays, the same recording can be retried
      this.store.showToast(message, () => {
        this.store.clearToast();
        this.store.setRecording("uploading");
        void this.submitAudio(audio, idempotencyKey);
      });
    }
  }

  private async endConversation(): Promise<void> {
    try {
      await this.api.endSession(this.store.sessionId);
      this.store.goTo("report");
    } catch (error) {
      this.store.showToast("Could not end the session.", () => {
        this.store.clearToast();
        void this.endConversation();
      });
    }
  }

  private async downloadTranscript(): Promise<void> {
    const body = await this.api.exportSession(this.store.sessionId);
    const blob = new Blob([body], { type: "application/json" });
    const url = URL.createObjectURL(blob);
    const anchor = this.root.ownerDocument.createElement("a");
    anchor.href = url;
    anchor.download = `session-${this.store.sessionId}.json`;
    anchor.click();
    URL.revokeObjectURL(url);
  }

  render(): void {
    const doc = this.root.ownerDocument;
    this.root.replaceChildren();
    switch (this.store.route) {
      case "landing":
      case "case_select": {
        this.root.appendChild(
          renderCaseSelect(doc, this.cases, this.specialtyFilter, this.pendingBespoke, {
            onSelectCase: (caseId) => void this.beginSession(caseId),
            onSubmitDescription: (description) =>
              void this.api.createBespokeCase(description).then((extracted) => {
                this.pendingBespoke = extracted;
                this.render();
              }),
            onConfirmBespoke: (caseId) => void this.beginSession(caseId),
          }),
        );
        break;
      }
      case "conversation": {
        const view = renderConversation(doc, this.store, {
          onRecordPress: () => void this.pressRecord(),
          onRecordRelease: () => void this.releaseRecord(),
          onEndConversation: () => void this.endConversation(),
          audioUrl: (audioRef) => this.api.audioUrl(audioRef),
          micRationale: MIC_RATIONALE,
        });
        if (this.store.ended) {
          const toReport = doc.createElement("button");
          toReport.id = "view-report-button";
          toReport.setAttribute("aria-label", "View the overall report");
          toReport.textContent = "View overall report";
          toReport.addEventListener("click", () => this.store.goTo("report"));
          view.appendChild(toReport);
        }
        this.root.appendChild(view);
        break;
      }
      case "report": {
        if (this.store.overall) {
          this.root.appendChild(
            renderReport(doc, this.store.overall, {
              onDownloadTranscript: () => void this.downloadTranscript(),
            }),
          );
        }
        break;
      }
    }
  }

  dispose(): void {
    this.closeStream?.();
  }
}
