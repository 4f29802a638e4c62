/**
 * Browser entry point.  Connects to the TCP bridge (see bridge.mjs), maps
 * keyboard and pointer input to wrench messages, and renders the live
 * session.  Query parameters: ?ws=ws://host:port overrides the endpoint.
 */

import { connectWebSocket, SessionClient } from './sessionClient';
import { render, ViewElements } from './render';
import { WrenchInput } from './wrenchInput';

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const els: ViewElements = {
  stage: el('stage'),
  connection: el('connection'),
  align: el('align'),
  progress: el<HTMLProgressElement>('progress'),
  clock: el('clock'),
  removed: el('removed'),
  report: el('report'),
  errors: el('errors'),
  cue: el('cue'),
  canvas: el<HTMLCanvasElement>('view'),
};

const params = new URLSearchParams(window.location.search);
const url = params.get('ws') ?? 'ws://localhost:8765';

const client = new SessionClient();
const input = new WrenchInput();

client.onChange(() => render(client.state, els, client.discardedInputs));
connectWebSocket(url, client);
input.start((f, tau) => {
  if (input.active || client.state.stage === 'Admittance') {
    client.sendWrench(f, tau);
  }
});

window.addEventListener('keydown', (ev) => {
  if (input.keyDown(ev.code)) ev.preventDefault();
});
window.addEventListener('keyup', (ev) => input.keyUp(ev.code));
window.addEventListener('blur', () => input.release());

let dragging = false;
let originX = 0;
let originY = 0;
els.canvas.addEventListener('pointerdown', (ev) => {
  dragging = true;
  originX = ev.clientX;
  originY = ev.clientY;
  els.canvas.setPointerCapture(ev.pointerId);
});
els.canvas.addEventListener('pointermove', (ev) => {
  if (dragging) input.pointerDrag(ev.clientX - originX, ev.clientY - originY);
});
for (const evName of ['pointerup', 'pointercancel'] as const) {
  els.canvas.addEventListener(evName, () => {
    dragging = false;
    input.release();
  });
}

el('btn-start').addEventListener('click', () => client.sendCommand('start_autonomous'));
el('btn-abort').addEventListener('click', () => client.sendCommand('abort'));
el('btn-reset').addEventListener('click', () => client.sendCommand('reset'));
el('btn-save').addEventListener('click', () => {
  const blob = new Blob([client.recorder.toNdjson()], { type: 'application/x-ndjson' });
  const a = document.createElement('a');
  a.href = URL.createObjectURL(blob);
  a.download = 'session.ndjson';
  a.click();
  URL.revokeObjectURL(a.href);
});

render(client.state, els);
