/**
 * Transport-agnostic session client: owns the message sequence numbers,
 * folds server traffic into the UI state, records the session, and
 * enforces the admittance-stage gate on wrench input.
 */

import {
  ClientMessage,
  CommandName,
  encodeClientMessage,
  LineSplitter,
  Vec3,
} from './protocol';
import { SessionRecorder } from './recorder';
import { initialState, reduce, UiSessionState } from './steeringState';

export interface Transport {
  send(line: string): void;
  close(): void;
}

export type StateListener = (state: UiSessionState) => void;

export class SessionClient {
  state: UiSessionState = initialState();
  readonly recorder = new SessionRecorder();
  /** count of wrench inputs discarded outside the Admittance stage;
   * display-only, deliberately not part of the replayable session state */
  discardedInputs = 0;

  private seq = 0;
  private splitter = new LineSplitter();
  private transport: Transport | null = null;
  private listeners: StateListener[] = [];

  onChange(listener: StateListener): void {
    this.listeners.push(listener);
  }

  private apply(event: Parameters<typeof reduce>[1]): void {
    this.recorder.record(event);
    this.state = reduce(this.state, event);
    for (const l of this.listeners) l(this.state);
  }

  /** Wire the client to a connected transport's line stream. */
  attach(transport: Transport): void {
    this.transport = transport;
    this.apply({ kind: 'open' });
  }

  handleChunk(chunk: string): void {
    for (const line of this.splitter.push(chunk)) {
      this.apply({ kind: 'line', line });
    }
  }

  handleClose(): void {
    this.apply({ kind: 'close' });
    this.transport = null;
  }

  get connected(): boolean {
    return this.transport !== null;
  }

  private send(msg: ClientMessage): void {
    if (!this.transport) return;
    this.transport.send(encodeClientMessage(msg) + '\n');
  }

  /** Send a wrench; outside the Admittance stage the input is discarded
   * and counted so the view can show a cue.  Returns true when sent. */
  sendWrench(f: Vec3, tau: Vec3 = [0, 0, 0], holdS?: number): boolean {
    if (this.state.stage !== 'Admittance' || this.state.done) {
      this.discardedInputs += 1;
      return false;
    }
    this.seq += 1;
    const msg = { type: 'wrench' as const, seq: this.seq, f, tau };
    this.send(holdS === undefined ? msg : { ...msg, hold_s: holdS });
    return true;
  }

  sendCommand(name: CommandName): void {
    this.seq += 1;
    this.send({ type: 'command', seq: this.seq, name });
  }

  close(): void {
    this.transport?.close();
  }
}

/** Browser transport: WebSocket endpoint of the TCP bridge. */
export function connectWebSocket(url: string, client: SessionClient): WebSocket {
  const ws = new WebSocket(url);
  client.state = reduce(client.state, { kind: 'connecting' });
  ws.onopen = () => client.attach({
    send: (line) => ws.send(line),
    close: () => ws.close(),
  });
  ws.onmessage = (ev) => client.handleChunk(String(ev.data));
  ws.onclose = () => client.handleClose();
  return ws;
}
