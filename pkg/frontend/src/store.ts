import { SeqBuffer } from "./events.js";
import type {
  ApiEvent,
  FeedbackMode,
  OverallFeedback,
  PatientUtteranceView,
  StageLabels,
  Turn,
  TurnFeedback,
} from "./types.js";

export type Route = "landing" | "case_select" | "conversation" | "report";
export type RecordingState = "idle" | "recording" | "uploading" | "awaiting_patient";

export interface FeedbackCard {
  turnIndex: number;
  available: boolean;
  feedback: TurnFeedback | null;
  stages: StageLabels;
}

export interface Toast {
  message: string;
  retry: (() => void) | null;
}

/**
 * Client-side session snapshot, built exclusively from pushed events.
 * Events are run through a SeqBuffer first, so the snapshot always
 * reflects seq order regardless of delivery order.
 */
export class SessionStore {
  route: Route = "landing";
  sessionId = "";
  feedbackMode: FeedbackMode = "both";
  turns: Turn[] = [];
  cards: FeedbackCard[] = [];
  utterances = new Map<number, PatientUtteranceView>();
  overall: OverallFeedback | null = null;
  ended = false;
  recording: RecordingState = "idle";
  toast: Toast | null = null;
  lastAudioRef: string | null = null;

  private buffer = new SeqBuffer((event) => this.apply(event));
  private listeners: Array<() => void> = [];

  subscribe(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  /** A turn is in flight from upload until the patient's text arrives. */
  get turnInFlight(): boolean {
    return this.recording === "uploading" || this.recording === "awaiting_patient";
  }

  startSession(sessionId: string, mode: FeedbackMode): void {
    this.sessionId = sessionId;
    this.feedbackMode = mode;
    this.route = "conversation";
    this.notify();
  }

  setRecording(state: RecordingState): void {
    this.recording = state;
    this.notify();
  }

  showToast(message: string, retry: (() => void) | null = null): void {
    this.toast = { message, retry };
    this.notify();
  }

  clearToast(): void {
    this.toast = null;
    this.notify();
  }

  goTo(route: Route): void {
    this.route = route;
    this.notify();
  }

  ingest(event: ApiEvent): void {
    this.buffer.push(event);
  }

  private apply(event: ApiEvent): void {
    const payload = event.payload as Record<string, any>;
    switch (event.kind) {
      case "clinician_turn": {
        this.turns.push(payload.turn as Turn);
        if (this.recording === "uploading") {
          this.recording = "awaiting_patient";
        }
        break;
      }
      case "turn_feedback": {
        this.cards.push({
          turnIndex: payload.turn_index as number,
          available: payload.available as boolean,
          feedback: (payload.feedback ?? null) as TurnFeedback | null,
          stages: payload.stages as StageLabels,
        });
        break;
      }
      case "patient_text": {
        const turn = payload.turn as Turn;
        this.turns.push(turn);
        this.utterances.set(turn.index, payload.utterance as PatientUtteranceView);
        if (!this.ended) {
          this.recording = "idle";
        }
        break;
      }
      case "patient_audio_ready": {
        this.lastAudioRef = (payload.audio_ref ?? null) as string | null;
        break;
      }
      case "session_ended": {
        this.ended = true;
        this.overall = payload.overall as OverallFeedback;
        this.recording = "idle";
        break;
      }
      default:
        break;
    }
    this.notify();
  }

  feedbackForTurn(turnIndex: number): FeedbackCard | undefined {
    return this.cards.find((card) => card.turnIndex === turnIndex);
  }
}
