/**
 * UI session state as a pure fold over the connection event stream.
 *
 * The reducer never consults clocks or local input, so replaying a recorded
 * session (the same open / line / close events) reproduces the exact final
 * display state.
 */

import {
  parseServerLine,
  ProtocolError,
  PROTOCOL_VERSION,
  ReportMessage,
  ServerMessage,
  Vec3,
} from './protocol';

export type ConnectionStatus = 'idle' | 'connecting' | 'connected' | 'closed';

export type SessionEvent =
  | { kind: 'connecting' }
  | { kind: 'open' }
  | { kind: 'close' }
  | { kind: 'line'; line: string };

export interface UiSessionState {
  connection: ConnectionStatus;
  /** null until the first state message announces its protocol version */
  protocolOk: boolean | null;
  stage: string;
  alignMm: number | null;
  elapsedS: number;
  guideMm: number;
  progressMm: number;
  removed: number;
  rpm: number;
  tipTrail: Vec3[];
  lastSeq: number | null;
  droppedMessages: number;
  parseErrors: number;
  errors: string[];
  report: ReportMessage | null;
  done: boolean;
}

const TRAIL_LIMIT = 5000;
const ERROR_LIMIT = 20;

export function initialState(): UiSessionState {
  return {
    connection: 'idle',
    protocolOk: null,
    stage: '-',
    alignMm: null,
    elapsedS: 0,
    guideMm: 0,
    progressMm: 0,
    removed: 0,
    rpm: 0,
    tipTrail: [],
    lastSeq: null,
    droppedMessages: 0,
    parseErrors: 0,
    errors: [],
    report: null,
    done: false,
  };
}

function applyServer(state: UiSessionState, msg: ServerMessage): UiSessionState {
  const dropped =
    state.lastSeq !== null && msg.seq > state.lastSeq + 1
      ? state.droppedMessages + (msg.seq - state.lastSeq - 1)
      : state.droppedMessages;
  const next: UiSessionState = { ...state, lastSeq: msg.seq, droppedMessages: dropped };

  if (msg.type === 'state') {
    if (msg.protocol !== undefined) {
      next.protocolOk = msg.protocol === PROTOCOL_VERSION;
    }
    next.stage = msg.stage;
    next.alignMm = msg.align_mm;
    next.elapsedS = msg.elapsed_s;
    next.guideMm = msg.guide_mm;
    next.progressMm = msg.progress_mm;
    next.removed = msg.removed;
    next.rpm = msg.rpm;
    const trail = state.tipTrail.concat([msg.pose.position]);
    next.tipTrail = trail.length > TRAIL_LIMIT ? trail.slice(-TRAIL_LIMIT) : trail;
    return next;
  }
  if (msg.type === 'report') {
    next.report = msg;
    next.done = true;
    return next;
  }
  next.errors = state.errors.concat([msg.message]).slice(-ERROR_LIMIT);
  return next;
}

export function reduce(state: UiSessionState, event: SessionEvent): UiSessionState {
  switch (event.kind) {
    case 'connecting':
      return { ...state, connection: 'connecting' };
    case 'open':
      return { ...state, connection: 'connected' };
    case 'close':
      return { ...state, connection: 'closed' };
    case 'line':
      try {
        return applyServer(state, parseServerLine(event.line));
      } catch (e) {
        if (e instanceof ProtocolError) {
          return { ...state, parseErrors: state.parseErrors + 1 };
        }
        throw e;
      }
  }
}

export function replay(events: SessionEvent[]): UiSessionState {
  return events.reduce(reduce, initialState());
}
