/**
 * Wire protocol of the drilling session service: one JSON message per line
 * over a full-duplex stream.  This module mirrors the server schema exactly
 * and performs all parsing/validation for the UI.
 */

export const PROTOCOL_VERSION = 1;

export type Vec3 = [number, number, number];

export interface Pose {
  position: Vec3;
  quaternion: [number, number, number, number];
}

export interface WrenchMessage {
  type: 'wrench';
  seq: number;
  f: Vec3;
  tau: Vec3;
  /** stepped-mode servers advance the simulation by this long per message */
  hold_s?: number;
}

export type CommandName = 'start_autonomous' | 'abort' | 'reset';

export interface CommandMessage {
  type: 'command';
  seq: number;
  name: CommandName;
}

export type ClientMessage = WrenchMessage | CommandMessage;

export interface StateMessage {
  type: 'state';
  seq: number;
  stage: string;
  pose: Pose;
  guide_mm: number;
  elapsed_s: number;
  removed: number;
  align_mm: number;
  progress_mm: number;
  rpm: number;
  protocol?: number;
}

export interface TrialReportPayload {
  trial_id: string;
  label: string;
  direction: string;
  icp_rmse_mm: number;
  transition_s_mm: number;
  fitted_radius_mm: number;
  radius_error_pct: number;
  n_points: number;
  ideal_radius_mm: number;
  fit_rmse_mm: number;
  direction_agreement_deg: number;
}

export interface ReportMessage {
  type: 'report';
  seq: number;
  plan_label: string;
  cutting_time_s: number;
  removed_voxel_count: number;
  report: TrialReportPayload | null;
  evaluation_error?: string;
}

export interface ErrorMessage {
  type: 'error';
  seq: number;
  echo_seq: number | null;
  message: string;
}

export type ServerMessage = StateMessage | ReportMessage | ErrorMessage;

export class ProtocolError extends Error {}

function expectNumber(v: unknown, name: string): number {
  if (typeof v !== 'number' || !Number.isFinite(v)) {
    throw new ProtocolError(`field ${name} is not a finite number`);
  }
  return v;
}

export function parseServerLine(line: string): ServerMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch (e) {
    throw new ProtocolError(`malformed JSON: ${(e as Error).message}`);
  }
  const msg = raw as Record<string, unknown>;
  const type = msg.type;
  if (type === 'state') {
    expectNumber(msg.seq, 'seq');
    expectNumber(msg.elapsed_s, 'elapsed_s');
    expectNumber(msg.align_mm, 'align_mm');
    if (typeof msg.stage !== 'string') throw new ProtocolError('state without stage');
    return msg as unknown as StateMessage;
  }
  if (type === 'report') {
    expectNumber(msg.seq, 'seq');
    expectNumber(msg.cutting_time_s, 'cutting_time_s');
    return msg as unknown as ReportMessage;
  }
  if (type === 'error') {
    expectNumber(msg.seq, 'seq');
    if (typeof msg.message !== 'string') throw new ProtocolError('error without message');
    return msg as unknown as ErrorMessage;
  }
  throw new ProtocolError(`unknown server message type ${String(type)}`);
}

export function encodeClientMessage(msg: ClientMessage): string {
  if (msg.type === 'wrench') {
    const all = [...msg.f, ...msg.tau];
    if (all.length !== 6 || all.some((v) => !Number.isFinite(v))) {
      throw new ProtocolError('wrench needs 6 finite numbers');
    }
  }
  return JSON.stringify(msg);
}

/** Buffers stream chunks and emits complete newline-terminated lines. */
export class LineSplitter {
  private buffer = '';

  push(chunk: string): string[] {
    this.buffer += chunk;
    const parts = this.buffer.split('\n');
    this.buffer = parts.pop() ?? '';
    return parts.filter((p) => p.trim().length > 0);
  }
}
