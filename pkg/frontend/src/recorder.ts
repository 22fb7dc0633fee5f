// Push-to-talk recording: explicit press and release so turn
// boundaries are predictable.

export const MIC_RATIONALE =
  "The microphone is used only while you hold the record button, to " +
  "capture your side of the practice conversation.";

export interface Recorder {
  start(): Promise<void>;
  stop(): Promise<Blob>;
}

export class MediaRecorderAdapter implements Recorder {
  private recorder: MediaRecorder | null = null;
  private chunks: BlobPart[] = [];

  async start(): Promise<void> {
    const stream = await navigator.mediaDevices.getUserMedia({ audio: true });
    this.chunks = [];
    this.recorder = new MediaRecorder(stream);
    this.recorder.ondataavailable = (event) => this.chunks.push(event.data);
    this.recorder.start();
  }

  stop(): Promise<Blob> {
    return new Promise((resolve, reject) => {
      const recorder = this.recorder;
      if (!recorder) {
        reject(new Error("recorder was never started"));
        return;
      }
      recorder.onstop = () => {
        recorder.stream.getTracks().forEach((track) => track.stop());
        resolve(new Blob(this.chunks, { type: recorder.mimeType }));
      };
      recorder.stop();
    });
  }
}
