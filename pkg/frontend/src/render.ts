/**
 * DOM + canvas rendering of the session state.  Pure view: everything
 * drawn here comes from UiSessionState (plus the discarded-input cue).
 */

import { UiSessionState } from './steeringState';

export interface ViewElements {
  stage: HTMLElement;
  connection: HTMLElement;
  align: HTMLElement;
  progress: HTMLProgressElement;
  clock: HTMLElement;
  removed: HTMLElement;
  report: HTMLElement;
  errors: HTMLElement;
  cue: HTMLElement;
  canvas: HTMLCanvasElement;
}

const TOTAL_PATH_MM = 52;

export function render(state: UiSessionState, els: ViewElements, discarded = 0): void {
  els.connection.textContent =
    state.connection + (state.protocolOk === false ? ' (protocol mismatch!)' : '');
  els.stage.textContent = state.stage;
  els.align.textContent =
    state.alignMm === null ? '-' : `${state.alignMm.toFixed(2)} mm`;
  els.align.className = state.alignMm !== null && state.alignMm <= 1.0 ? 'ok' : 'warn';
  els.clock.textContent = `${state.elapsedS.toFixed(1)} s`;
  els.removed.textContent = String(state.removed);
  els.progress.value = Math.min(1, (state.progressMm + state.guideMm) / TOTAL_PATH_MM);
  els.cue.textContent = discarded > 0 ? `${discarded} inputs ignored outside Admittance` : '';
  els.errors.textContent = state.errors.slice(-3).join('\n');

  if (state.report) {
    const r = state.report;
    const lines = [`plan ${r.plan_label}: cutting time ${r.cutting_time_s} s,`,
                   `${r.removed_voxel_count} voxels removed`];
    if (r.report) {
      lines.push(`radius ${r.report.fitted_radius_mm.toFixed(2)} mm `
        + `(${r.report.radius_error_pct.toFixed(2)}% error), `
        + `transition ${r.report.transition_s_mm.toFixed(2)} mm, `
        + `ICP RMSE ${r.report.icp_rmse_mm.toFixed(4)} mm`);
    } else if (r.evaluation_error) {
      lines.push(`evaluation: ${r.evaluation_error}`);
    }
    els.report.textContent = lines.join(' ');
  } else {
    els.report.textContent = state.done ? 'done' : '';
  }

  drawTrail(state, els.canvas);
}

/** Top-down x/y projection: channel entry at the left, insertion toward +x. */
function drawTrail(state: UiSessionState, canvas: HTMLCanvasElement): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const sx = (x: number) => 40 + (x / 60) * (width - 80);
  const sy = (y: number) => height / 2 - (y / 30) * (height / 2 - 20);

  ctx.strokeStyle = '#555';
  ctx.strokeRect(sx(0), sy(15), sx(56) - sx(0), sy(-15) - sy(15));
  ctx.strokeStyle = '#888';
  ctx.beginPath();
  ctx.moveTo(sx(0), sy(4));
  ctx.lineTo(sx(17), sy(4));
  ctx.moveTo(sx(0), sy(-4));
  ctx.lineTo(sx(17), sy(-4));
  ctx.stroke();

  if (state.tipTrail.length > 1) {
    ctx.strokeStyle = '#18a0fb';
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(sx(state.tipTrail[0][0]), sy(state.tipTrail[0][1]));
    for (const [x, y] of state.tipTrail) ctx.lineTo(sx(x), sy(y));
    ctx.stroke();
  }
  const tip = state.tipTrail[state.tipTrail.length - 1];
  if (tip) {
    ctx.fillStyle = state.rpm > 0 ? '#e5484d' : '#30a46c';
    ctx.beginPath();
    ctx.arc(sx(tip[0]), sy(tip[1]), 5, 0, 2 * Math.PI);
    ctx.fill();
  }
  ctx.lineWidth = 1;
}
