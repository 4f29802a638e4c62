/**
 * Maps keyboard / pointer gestures to bounded hand wrenches and streams
 * them at a fixed rate while the admittance stage is active.
 *
 * Axis convention matches the service: +x is the insertion direction.
 * Keys: W/S drive +x/-x, A/D drive +y/-y, R/F drive +z/-z.  A pointer drag
 * maps to the y/z plane.  Forces are clamped to MAX_FORCE_N per axis and a
 * zero wrench is emitted on release (at the next tick, well inside 100 ms
 * at the default 20 Hz).
 */

import { Vec3 } from './protocol';

export const MAX_FORCE_N = 5.0;
export const KEY_FORCE_N = 3.0;
export const DEFAULT_RATE_HZ = 20;

const KEY_AXES: Record<string, [number, number]> = {
  KeyW: [0, 1],
  KeyS: [0, -1],
  KeyA: [1, 1],
  KeyD: [1, -1],
  KeyR: [2, 1],
  KeyF: [2, -1],
};

export type WrenchSink = (f: Vec3, tau: Vec3) => void;

export class WrenchInput {
  private held = new Set<string>();
  private drag: Vec3 = [0, 0, 0];
  private timer: ReturnType<typeof setInterval> | null = null;

  keyDown(code: string): boolean {
    if (!(code in KEY_AXES)) return false;
    this.held.add(code);
    return true;
  }

  keyUp(code: string): void {
    this.held.delete(code);
  }

  /** Pointer drag in pixels; gain converts pixels to newtons. */
  pointerDrag(dxPx: number, dyPx: number, gain = 0.05): void {
    this.drag = [0, clamp(dxPx * gain), clamp(-dyPx * gain)];
  }

  release(): void {
    this.held.clear();
    this.drag = [0, 0, 0];
  }

  get active(): boolean {
    return this.held.size > 0 || this.drag.some((v) => v !== 0);
  }

  currentForce(): Vec3 {
    const f: Vec3 = [...this.drag];
    for (const code of this.held) {
      const [axis, sign] = KEY_AXES[code];
      f[axis] += sign * KEY_FORCE_N;
    }
    return [clamp(f[0]), clamp(f[1]), clamp(f[2])];
  }

  /** Start the fixed-rate stream; every tick emits the current wrench
   * (zero keepalives included, so release propagates within one tick). */
  start(sink: WrenchSink, rateHz: number = DEFAULT_RATE_HZ): void {
    this.stop();
    this.timer = setInterval(() => {
      sink(this.currentForce(), [0, 0, 0]);
    }, 1000 / rateHz);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}

function clamp(v: number): number {
  return Math.max(-MAX_FORCE_N, Math.min(MAX_FORCE_N, v));
}
