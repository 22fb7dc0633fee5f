// Wire types mirroring the service's canonical JSON. Every number or
// string rendered by the UI comes straight from one of these fields.

export interface CaseSummary {
  case_id: string;
  specialty: string;
  interlocutor: string;
  origin: string;
  summary: string;
}

export interface CaseScenario {
  case_id: string;
  specialty: string;
  patient_profile: string;
  interlocutor: string;
  relationship: string | null;
  medical_situation: string;
  medical_error: string;
  patient_knowledge: string;
  cause_known: boolean;
  origin: string;
}

export interface StageLabels {
  codes: string[];
  turn_index: number;
}

export interface Improvement {
  subtitle: string;
  description: string;
  suggestion: string;
  example_phrasing: string;
}

export type Span = [number, number];

export interface TurnFeedback {
  turn_index: number;
  stages: StageLabels;
  overall_score: string;
  overall_score_display: string;
  criterion_scores: Record<string, number>;
  strengths: string[];
  improvements: Improvement[];
  encouragement: string;
  strength_phrases: string[];
  improvement_phrases: string[];
  strength_spans: Span[];
  improvement_spans: Span[];
}

export interface AreaReport {
  addressed: boolean;
  score: string | null;
  score_display: string | null;
  assessment: string;
  strengths: string[];
  improvements: string[];
  examples: string[];
}

export interface OverallFeedback {
  per_area: Record<string, AreaReport>;
  overall_text: string;
  overall_score: string | null;
  overall_score_display: string | null;
  key_strengths: string[];
  key_improvements: string[];
}

export interface Turn {
  index: number;
  speaker: "clinician" | "patient";
  transcript: string;
  created_at: string;
  audio_ref: string | null;
}

export interface PatientUtteranceView {
  ssml_text: string;
  plain_text: string;
  voice_instructions: string;
  is_closing: boolean;
  audio_ref: string | null;
}

export type EventKind =
  | "transcript_partial"
  | "clinician_turn"
  | "turn_feedback"
  | "patient_text"
  | "patient_audio_ready"
  | "session_ended"
  | "error";

export interface ApiEvent {
  session_id: string;
  seq: number;
  kind: EventKind;
  payload: Record<string, unknown>;
}

export type FeedbackMode = "turn_by_turn" | "overall_only" | "both";
