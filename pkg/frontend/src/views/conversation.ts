import { renderHighlighted } from "../highlight.js";
import type { SessionStore } from "../store.js";
import type { TurnFeedback } from "../types.js";

export interface ConversationHandlers {
  onRecordPress(): void;
  onRecordRelease(): void;
  onEndConversation(): void;
  audioUrl(audioRef: string): string;
  micRationale: string;
}

function feedbackCardElement(doc: Document, feedback: TurnFeedback): HTMLElement {
  const card = doc.createElement("article");
  card.className = "feedback-card";
  card.dataset.turnIndex = String(feedback.turn_index);

  const score = doc.createElement("header");
  score.className = "feedback-score";
  score.textContent = `Score ${feedback.overall_score_display} / 5 (${feedback.stages.codes.join(", ")})`;
  card.appendChild(score);

  // strengths and improvements live in visually separated regions
  const strengths = doc.createElement("section");
  strengths.className = "feedback-strengths";
  const sTitle = doc.createElement("h3");
  sTitle.textContent = "What went well";
  strengths.appendChild(sTitle);
  const sList = doc.createElement("ul");
  for (const item of feedback.strengths) {
    const li = doc.createElement("li");
    li.textContent = item;
    sList.appendChild(li);
  }
  strengths.appendChild(sList);
  card.appendChild(strengths);

  const improvements = doc.createElement("section");
  improvements.className = "feedback-improvements";
  const iTitle = doc.createElement("h3");
  iTitle.textContent = "Opportunities";
  improvements.appendChild(iTitle);
  for (const imp of feedback.improvements) {
    const block = doc.createElement("div");
    block.className = "improvement";
    const subtitle = doc.createElement("h4");
    subtitle.textContent = imp.subtitle;
    block.appendChild(subtitle);
    for (const text of [imp.description, imp.suggestion, `Try: ${imp.example_phrasing}`]) {
      const p = doc.createElement("p");
      p.textContent = text;
      block.appendChild(p);
    }
    improvements.appendChild(block);
  }
  card.appendChild(improvements);

  const encouragement = doc.createElement("footer");
  encouragement.className = "feedback-encouragement";
  encouragement.textContent = feedback.encouragement;
  card.appendChild(encouragement);
  return card;
}

export function renderConversation(
  doc: Document,
  store: SessionStore,
  handlers: ConversationHandlers,
): HTMLElement {
  const root = doc.createElement("div");
  root.className = "conversation-view";

  // left panel: the conversation transcript in event order
  const transcriptPanel = doc.createElement("section");
  transcriptPanel.className = "transcript-panel";
  transcriptPanel.setAttribute("aria-label", "Conversation transcript");
  for (const turn of store.turns) {
    const bubble = doc.createElement("div");
    bubble.className = `bubble bubble-${turn.speaker}`;
    bubble.dataset.turnIndex = String(turn.index);
    const speaker = doc.createElement("span");
    speaker.className = "speaker";
    speaker.textContent = turn.speaker === "clinician" ? "You" : "Patient";
    bubble.appendChild(speaker);
    const card = store.feedbackForTurn(turn.index);
    if (turn.speaker === "clinician" && card?.feedback) {
      bubble.appendChild(
        renderHighlighted(
          doc,
          turn.transcript,
          card.feedback.strength_spans,
          card.feedback.improvement_spans,
        ),
      );
    } else {
      const text = doc.createElement("span");
      text.className = "transcript-text";
      text.textContent = turn.transcript;
      bubble.appendChild(text);
    }
    transcriptPanel.appendChild(bubble);
  }
  root.appendChild(transcriptPanel);

  // right panel: turn feedback cards, hidden in overall-only mode
  const feedbackPanel = doc.createElement("aside");
  feedbackPanel.className = "feedback-panel";
  feedbackPanel.setAttribute("aria-label", "Turn feedback");
  if (store.feedbackMode !== "overall_only") {
    for (const card of store.cards) {
      if (card.feedback) {
        feedbackPanel.appendChild(feedbackCardElement(doc, card.feedback));
      } else {
        const unavailable = doc.createElement("article");
        unavailable.className = "feedback-card feedback-unavailable";
        unavailable.textContent = "Feedback is unavailable for this turn.";
        feedbackPanel.appendChild(unavailable);
      }
    }
  }
  root.appendChild(feedbackPanel);

  // patient audio: autoplay the latest clip when it arrives
  if (store.lastAudioRef) {
    const audio = doc.createElement("audio");
    audio.className = "patient-audio";
    audio.src = handlers.audioUrl(store.lastAudioRef);
    audio.autoplay = true;
    root.appendChild(audio);
    const maybePlay = (audio as HTMLAudioElement).play?.bind(audio);
    if (maybePlay) {
      try {
        void maybePlay()?.catch(() => undefined);
      } catch {
        // jsdom and autoplay-blocked browsers: transcript is already shown
      }
    }
  }

  // controls: record (push-to-talk), stop recording, end conversation
  const controls = doc.createElement("div");
  controls.className = "controls";

  const record = doc.createElement("button");
  record.id = "record-button";
  record.className = "control control-record";
  record.setAttribute("aria-label", "Hold to record your reply");
  record.textContent = store.recording === "recording" ? "Recording… release to send" : "Hold to talk";
  record.disabled = store.turnInFlight || store.ended;
  record.addEventListener("mousedown", () => handlers.onRecordPress());
  record.addEventListener("mouseup", () => handlers.onRecordRelease());
  controls.appendChild(record);

  const stop = doc.createElement("button");
  stop.id = "stop-recording-button";
  stop.className = "control control-stop";
  stop.setAttribute("aria-label", "Stop recording");
  stop.textContent = "Stop recording";
  stop.disabled = store.recording !== "recording";
  stop.addEventListener("click", () => handlers.onRecordRelease());
  controls.appendChild(stop);

  const end = doc.createElement("button");
  end.id = "end-conversation-button";
  end.className = "control control-end";
  end.setAttribute("aria-label", "End conversation");
  end.textContent = "End conversation";
  end.disabled = store.turnInFlight;
  end.addEventListener("click", () => handlers.onEndConversation());
  controls.appendChild(end);

  const rationale = doc.createElement("p");
  rationale.className = "mic-rationale";
  rationale.textContent = handlers.micRationale;
  controls.appendChild(rationale);
  root.appendChild(controls);

  // pipeline latency indicator
  if (store.recording === "uploading" || store.recording === "awaiting_patient") {
    const thinking = doc.createElement("div");
    thinking.className = "thinking-indicator";
    thinking.setAttribute("role", "status");
    thinking.textContent = "The patient is thinking…";
    root.appendChild(thinking);
  }

  // non-blocking error toast with a retry affordance
  if (store.toast) {
    const toast = doc.createElement("div");
    toast.className = "toast";
    toast.setAttribute("role", "alert");
    const message = doc.createElement("span");
    message.textContent = store.toast.message;
    toast.appendChild(message);
    if (store.toast.retry) {
      const retry = doc.createElement("button");
      retry.className = "toast-retry";
      retry.setAttribute("aria-label", "Retry last turn");
      retry.textContent = "Retry";
      const retryFn = store.toast.retry;
      retry.addEventListener("click", () => retryFn());
      toast.appendChild(retry);
    }
    root.appendChild(toast);
  }

  return root;
}
