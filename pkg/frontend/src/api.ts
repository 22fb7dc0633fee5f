import type {
  ApiEvent,
  CaseScenario,
  CaseSummary,
  FeedbackMode,
  OverallFeedback,
} from "./types.js";

export interface SessionOptionsBody {
  feedback_mode?: FeedbackMode;
  window?: number;
  turn_budget?: number;
}

/** Thin client over the HTTP surface; no domain logic lives here. */
export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = fetch.bind(globalThis),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let code = `HTTP ${response.status}`;
      let message = response.statusText;
      try {
        const body = await response.json();
        code = body.code ?? code;
        message = body.message ?? message;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, code, message);
    }
    return response;
  }

  async listCases(specialty?: string): Promise<CaseSummary[]> {
    const query = specialty ? `?specialty=${encodeURIComponent(specialty)}` : "";
    const response = await this.request(`/cases${query}`);
    return (await response.json()).cases;
  }

  async createBespokeCase(description: string): Promise<CaseScenario> {
    const response = await this.request("/cases", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ description }),
    });
    return (await response.json()).case;
  }

  async createSession(caseId: string, options: SessionOptionsBody = {}): Promise<string> {
    const response = await this.request("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ case_id: caseId, options }),
    });
    return (await response.json()).session.session_id;
  }

  async submitTextTurn(sessionId: string, text: string, idempotencyKey?: string): Promise<void> {
    await this.request(`/sessions/${sessionId}/turns`, {
      method: "POST",
      headers: {
        "Content-Type": "application/json",
        ...(idempotencyKey ? { "Idempotency-Key": idempotencyKey } : {}),
      },
      body: JSON.stringify({ text }),
    });
  }

  async submitAudioTurn(sessionId: string, audio: Blob, idempotencyKey?: string): Promise<void> {
    const form = new FormData();
    form.append("audio", audio, "turn.wav");
    await this.request(`/sessions/${sessionId}/turns`, {
      method: "POST",
      headers: idempotencyKey ? { "Idempotency-Key": idempotencyKey } : {},
      body: form,
    });
  }

  async endSession(sessionId: string): Promise<OverallFeedback> {
    const response = await this.request(`/sessions/${sessionId}/end`, { method: "POST" });
    return (await response.json()).overall;
  }

  /** Raw session export; the download button must write these exact bytes. */
  async exportSession(sessionId: string): Promise<string> {
    const response = await this.request(`/sessions/${sessionId}`);
    return response.text();
  }

  audioUrl(audioRef: string): string {
    return `${this.baseUrl}/audio/${audioRef}`;
  }

  /**
   * Live event subscription. Returns a close function. Events may
   * arrive out of order; feed them through a SeqBuffer.
   */
  subscribeEvents(
    sessionId: string,
    onEvent: (event: ApiEvent) => void,
    after = 0,
  ): () => void {
    const source = new EventSource(
      `${this.baseUrl}/sessions/${sessionId}/events?after=${after}`,
    );
    const kinds = [
      "clinician_turn",
      "turn_feedback",
      "patient_text",
      "patient_audio_ready",
      "session_ended",
      "error",
    ];
    for (const kind of kinds) {
      source.addEventListener(kind, (raw) => {
        onEvent(JSON.parse((raw as MessageEvent).data) as ApiEvent);
      });
    }
    return () => source.close();
  }
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}
