import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { Vec3 } from '../src/protocol';
import { SessionClient } from '../src/sessionClient';
import { MAX_FORCE_N, WrenchInput } from '../src/wrenchInput';

describe('WrenchInput mapping', () => {
  it('maps keys to bounded axis forces', () => {
    const input = new WrenchInput();
    input.keyDown('KeyW');
    expect(input.currentForce()).toEqual([3, 0, 0]);
    input.keyDown('KeyA');
    input.keyDown('KeyF');
    expect(input.currentForce()).toEqual([3, 3, -3]);
    input.keyUp('KeyW');
    expect(input.currentForce()).toEqual([0, 3, -3]);
  });

  it('ignores unmapped keys', () => {
    const input = new WrenchInput();
    expect(input.keyDown('KeyQ')).toBe(false);
    expect(input.currentForce()).toEqual([0, 0, 0]);
  });

  it('clamps pointer drags to the force budget', () => {
    const input = new WrenchInput();
    input.pointerDrag(10_000, -10_000);
    const f = input.currentForce();
    expect(Math.max(...f.map(Math.abs))).toBeLessThanOrEqual(MAX_FORCE_N);
    expect(f[1]).toBe(MAX_FORCE_N);
    expect(f[2]).toBe(MAX_FORCE_N);
  });
});

describe('WrenchInput streaming', () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it('emits at 20 Hz while active and zeroes within 100 ms of release', () => {
    const input = new WrenchInput();
    const sent: Vec3[] = [];
    input.start((f) => sent.push(f));
    input.keyDown('KeyW');
    vi.advanceTimersByTime(1000);
    expect(sent.length).toBe(20);
    expect(sent.every((f) => f[0] === 3)).toBe(true);

    input.release();
    vi.advanceTimersByTime(100);
    const tail = sent.slice(20);
    expect(tail.length).toBeGreaterThanOrEqual(1);
    expect(tail[0]).toEqual([0, 0, 0]);
    input.stop();
  });
});

describe('SessionClient input gating', () => {
  it('discards wrenches outside the Admittance stage', () => {
    const client = new SessionClient();
    const sentLines: string[] = [];
    client.attach({ send: (l) => sentLines.push(l), close: () => undefined });

    client.handleChunk(JSON.stringify({
      type: 'state', seq: 0, stage: 'Admittance',
      pose: { position: [0, 0, 0], quaternion: [1, 0, 0, 0] },
      guide_mm: 0, elapsed_s: 0, removed: 0, align_mm: 0, progress_mm: 0, rpm: 0,
    }) + '\n');
    expect(client.sendWrench([0, -1.5, 0])).toBe(true);

    client.handleChunk(JSON.stringify({
      type: 'state', seq: 1, stage: 'StationaryCurve',
      pose: { position: [17, 0, 0], quaternion: [1, 0, 0, 0] },
      guide_mm: 3, elapsed_s: 18, removed: 10, align_mm: 17, progress_mm: 17, rpm: 8250,
    }) + '\n');
    expect(client.sendWrench([0, -1.5, 0])).toBe(false);
    expect(client.discardedInputs).toBe(1);

    // commands still go through, with a monotone client seq
    client.sendCommand('abort');
    const seqs = sentLines.map((l) => JSON.parse(l).seq);
    expect(seqs).toEqual([1, 2]);
  });
});
