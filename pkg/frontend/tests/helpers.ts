import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { ApiEvent, OverallFeedback } from "../src/types.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const GOLDEN_DIR = join(HERE, "..", "..", "src", "candor", "data", "golden");

interface LogRecord {
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
}

/** The shipped golden session log, mapped to the event-stream shape. */
export function goldenEvents(): ApiEvent[] {
  const lines = readFileSync(join(GOLDEN_DIR, "session.log"), "utf-8")
    .split("\n")
    .filter((line) => line.trim());
  const records = lines.map((line) => JSON.parse(line) as LogRecord);
  return records
    .filter((record) => record.kind !== "session_created")
    .map((record) => ({
      session_id: "golden-0001",
      seq: record.seq,
      kind: record.kind as ApiEvent["kind"],
      payload: record.payload,
    }));
}

export function goldenOverall(): OverallFeedback {
  const artifacts = JSON.parse(
    readFileSync(join(GOLDEN_DIR, "artifacts.json"), "utf-8"),
  );
  return artifacts.overall as OverallFeedback;
}

/** Deterministic shuffle so "out-of-order delivery" is reproducible. */
export function seededShuffle<T>(items: T[], seed: number): T[] {
  const out = [...items];
  let state = seed >>> 0;
  const next = () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
  for (let i = out.length - 1; i > 0; i--) {
    const j = Math.floor(next() * (i + 1));
    [out[i], out[j]] = [out[j], out[i]];
  }
  return out;
}
