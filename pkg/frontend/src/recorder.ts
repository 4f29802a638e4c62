/**
 * Session recording and replay.
 *
 * A recording is newline-delimited JSON: every connection event is one
 * line, so replaying a file reproduces the exact reducer input stream and
 * therefore the exact final display state.
 */

import { replay, SessionEvent, UiSessionState } from './steeringState';

export class SessionRecorder {
  private events: SessionEvent[] = [];

  record(event: SessionEvent): void {
    this.events.push(event);
  }

  get count(): number {
    return this.events.length;
  }

  toNdjson(): string {
    return this.events.map((e) => JSON.stringify(e)).join('\n') + '\n';
  }

  snapshotEvents(): SessionEvent[] {
    return [...this.events];
  }
}

export function parseRecording(ndjson: string): SessionEvent[] {
  return ndjson
    .split('\n')
    .filter((l) => l.trim().length > 0)
    .map((l) => JSON.parse(l) as SessionEvent);
}

export function replayRecording(ndjson: string): UiSessionState {
  return replay(parseRecording(ndjson));
}
