import { describe, expect, it } from 'vitest';

import { MapView, type Ctx2D } from '../src/canvas';
import { resizeRectangle } from '../src/corrections';
import { objectiveLabel, reorder } from '../src/objectives';
import { headingTo } from '../src/steer';
import { buildViewModel, defaultToggles } from '../src/viewmodel';
import type { Snapshot } from '../src/types';

function sampleSnapshot(): Snapshot {
  return {
    version: 1,
    scenario: {
      floor: { width: 60, height: 20, aps: [['a', [10, 5]], ['b', [30, 5]]] },
    },
    seed: 0,
    events: [],
    state: {
      open: true,
      clock: 12.0,
      true_position: [12, 0],
      reported_path: [
        [0, 0],
        [6, 0],
        [12, 0],
      ],
      true_path: [
        [0, 0],
        [6, 0],
        [12, 0],
      ],
      marks: [['a', 10, 0]],
      pools: [
        { pair: ['a', 'b'], signature: 0, members: 2, compound: [20, 0], good: true },
        { pair: ['a', 'b'], signature: 2, members: 1, compound: [19, 1], good: false },
      ],
      constellation: { a: [0, 0], b: [20, 0] },
      positioned: true,
      objectives: [
        { kind: 'locate_aps', params: { scope: 'all' } },
        { kind: 'floor_plan', params: {} },
      ],
      completed: [],
      floor_plan: {
        components: [
          {
            id: 'r1',
            kind: 'room',
            geometry: [
              [0, 0],
              [8, 0],
              [8, 6],
              [0, 6],
            ],
            width: 0,
            locked: true,
            source: 'corrected',
          },
        ],
        blocks: [[4, 4]],
      },
      suggestions: {
        objective: 'locate_aps',
        paths: [
          [
            [0, 0],
            [8, 0],
          ],
        ],
        pending_points: [
          [0, 0],
          [8, 0],
        ],
      },
      tracked: null,
    },
  };
}

describe('viewmodel', () => {
  it('builds layers purely from the snapshot', () => {
    const vm = buildViewModel(sampleSnapshot());
    expect(vm.walkerReported).toEqual([12, 0]);
    expect(vm.suggestedPaths).toHaveLength(1);
    expect(vm.rooms[0].locked).toBe(true);
    expect(vm.activeObjective).toBe('locate_aps');
    expect(vm.trueAps.map((a) => a.id)).toEqual(['a', 'b']);
  });

  it('is reproducible: same snapshot, same view', () => {
    const snap = sampleSnapshot();
    expect(buildViewModel(snap)).toEqual(buildViewModel(snap));
  });

  it('colors pool status lines red/green from convergence', () => {
    const vm = buildViewModel(sampleSnapshot());
    expect(vm.statusLines.map((l) => l.good)).toEqual([true, false]);
    expect(vm.statusLines[0].to).toEqual([20, 0]);
  });

  it('hides ground truth by default', () => {
    expect(defaultToggles.groundTruth).toBe(false);
  });
});

describe('canvas rendering', () => {
  function recorder(): { ctx: Ctx2D; calls: string[] } {
    const calls: string[] = [];
    const ctx = new Proxy(
      { strokeStyle: '', fillStyle: '', lineWidth: 1, font: '', globalAlpha: 1 },
      {
        get(target, prop: string) {
          if (prop in target) return (target as Record<string, unknown>)[prop];
          return (...args: unknown[]) => {
            calls.push(prop);
            void args;
          };
        },
        set(target, prop: string, value) {
          (target as Record<string, unknown>)[prop] = value;
          return true;
        },
      },
    ) as unknown as Ctx2D;
    return { ctx, calls };
  }

  it('draws the toggled layers and skips hidden ones', () => {
    const { ctx, calls } = recorder();
    const view = new MapView(ctx, 800, 400);
    const vm = buildViewModel(sampleSnapshot());
    view.render(vm, { ...defaultToggles });
    expect(calls).toContain('clearRect');
    expect(calls.filter((c) => c === 'stroke').length).toBeGreaterThan(2);

    const { ctx: ctx2, calls: calls2 } = recorder();
    new MapView(ctx2, 800, 400).render(vm, {
      groundTruth: false,
      suggestedPath: false,
      walkedPath: false,
      pendingPoints: false,
      constellation: false,
      floorPlan: false,
      poolStatus: false,
    });
    expect(calls2.filter((c) => c === 'fillText')).toHaveLength(0);
  });

  it('round-trips screen and floor coordinates', () => {
    const { ctx } = recorder();
    const view = new MapView(ctx, 800, 400);
    const vm = buildViewModel(sampleSnapshot());
    const [sx, sy] = view.toScreen(vm, [12, 7]);
    const [fx, fy] = view.toFloor(vm, sx, sy);
    expect(fx).toBeCloseTo(12, 6);
    expect(fy).toBeCloseTo(7, 6);
  });
});

describe('helpers', () => {
  it('reorder moves items without mutating the input', () => {
    const items = ['a', 'b', 'c'];
    expect(reorder(items, 2, 0)).toEqual(['c', 'a', 'b']);
    expect(items).toEqual(['a', 'b', 'c']);
  });

  it('headingTo follows the math convention', () => {
    expect(headingTo([0, 0], [1, 0])).toBeCloseTo(0);
    expect(headingTo([0, 0], [0, 1])).toBeCloseTo(90);
    expect(headingTo([0, 0], [-1, 0])).toBeCloseTo(180);
  });

  it('resizeRectangle grows from the anchor corner', () => {
    const grown = resizeRectangle(
      [
        [0, 0],
        [8, 0],
        [8, 6],
        [0, 6],
      ],
      1,
      2,
    );
    expect(grown).toEqual([
      [0, 0],
      [9, 0],
      [9, 8],
      [0, 8],
    ]);
  });

  it('labels every objective kind', () => {
    expect(objectiveLabel({ kind: 'floor_plan', params: {} })).toBe('Floor plan');
    expect(objectiveLabel({ kind: 'refine_trajectories', params: {} })).toBe(
      'Refine trajectories',
    );
  });
});
