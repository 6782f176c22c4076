// Wiring: one session, one canvas, a long-poll loop feeding re-renders.

import { SessionClient } from './api';
import { MapView } from './canvas';
import { CorrectionPanel } from './corrections';
import { ObjectiveListEditor } from './objectives';
import { SteerController } from './steer';
import { buildViewModel, defaultToggles, type LayerToggles } from './viewmodel';
import type { Snapshot, XY } from './types';

function apiBase(): string {
  const param = new URLSearchParams(location.search).get('api');
  if (param) return param.replace(/\/$/, '');
  return location.origin.startsWith('http')
    ? location.origin
    : 'http://127.0.0.1:8008';
}

export async function boot(root: Document = document): Promise<void> {
  const client = new SessionClient(apiBase());
  const canvasEl = root.getElementById('map') as HTMLCanvasElement;
  const ctx = canvasEl.getContext('2d');
  if (!ctx) throw new Error('canvas unsupported');
  const view = new MapView(ctx, canvasEl.width, canvasEl.height);
  const toggles: LayerToggles = { ...defaultToggles };
  const statusEl = root.getElementById('status')!;
  const toastEl = root.getElementById('toast')!;

  let snapshot: Snapshot | null = null;

  const showError = (message: string) => {
    toastEl.textContent = message;
    toastEl.classList.add('visible');
    setTimeout(() => toastEl.classList.remove('visible'), 4000);
  };

  const refresh = async () => {
    snapshot = await client.getState();
    const vm = buildViewModel(snapshot);
    view.render(vm, toggles);
    objectiveList.setObjectives(vm.objectives);
    statusEl.textContent =
      `t=${vm.clock.toFixed(1)} | objective: ${vm.activeObjective ?? 'idle'}` +
      `${vm.open ? '' : ' | session closed'}`;
    steer.enabled = vm.open;
    (root.getElementById('controls') as HTMLFieldSetElement).disabled = !vm.open;
  };

  const currentPosition = (): XY =>
    snapshot
      ? snapshot.state.reported_path[snapshot.state.reported_path.length - 1]
      : [0, 0];

  const steer = new SteerController(client, currentPosition, refresh, showError);
  const objectiveList = new ObjectiveListEditor(
    root.getElementById('objectives')!,
    client,
    refresh,
    showError,
  );
  const corrections = new CorrectionPanel(client, refresh, showError);

  await client.createSession({
    builtin: 'office17',
    seed: Math.floor(Math.random() * 1_000_000),
    objectives: [
      { kind: 'locate_aps', params: { scope: 'all' } },
      { kind: 'floor_plan', params: {} },
    ],
  });
  await refresh();

  canvasEl.addEventListener('click', (ev) => {
    if (!snapshot) return;
    const rect = canvasEl.getBoundingClientRect();
    const vm = buildViewModel(snapshot);
    const target = view.toFloor(vm, ev.clientX - rect.left, ev.clientY - rect.top);
    if (ev.shiftKey) {
      // shift-click selects the nearest room for correction
      const room = vm.rooms
        .map((r) => ({
          room: r,
          d: Math.hypot(r.geometry[0][0] - target[0], r.geometry[0][1] - target[1]),
        }))
        .sort((a, b) => a.d - b.d)[0];
      const component = snapshot.state.floor_plan.components.find(
        (c) => c.id === room?.room.id,
      );
      corrections.select(component ?? null);
      statusEl.textContent = component
        ? `selected ${component.id}${component.locked ? ' (locked)' : ''}`
        : 'nothing selected';
      return;
    }
    steer.setWaypoint(target);
  });

  root.addEventListener('keydown', (ev) => steer.keyDown((ev as KeyboardEvent).key));
  root.addEventListener('keyup', (ev) => steer.keyUp((ev as KeyboardEvent).key));
  steer.start();

  for (const name of Object.keys(toggles) as (keyof LayerToggles)[]) {
    const box = root.getElementById(`toggle-${name}`) as HTMLInputElement | null;
    if (!box) continue;
    box.checked = toggles[name];
    box.addEventListener('change', () => {
      toggles[name] = box.checked;
      if (snapshot) view.render(buildViewModel(snapshot), toggles);
    });
  }

  root.getElementById('terminate')?.addEventListener('click', async () => {
    await client.postCommand({ type: 'terminate' });
    await refresh();
  });

  root.getElementById('lock-selected')?.addEventListener('click', async () => {
    if (!corrections.selected) {
      showError('shift-click a room first');
      return;
    }
    await corrections.apply({
      geometry: corrections.selected.geometry,
      kind: corrections.selected.kind,
      lock: true,
    });
  });

  // event stream: re-render whenever the server acknowledges new commands
  void (async () => {
    let cursor = (snapshot as Snapshot | null)?.events.length ?? 0;
    for (;;) {
      try {
        const { next } = await client.pollEvents(cursor, 20);
        if (next > cursor) {
          cursor = next;
          await refresh();
        }
      } catch {
        await new Promise((r) => setTimeout(r, 1000));
      }
    }
  })();
}

if (typeof document !== 'undefined' && document.getElementById('map')) {
  void boot();
}
