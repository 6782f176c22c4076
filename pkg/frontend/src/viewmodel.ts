// Pure snapshot -> layer data. Nothing here simulates; the view is a function
// of the last acknowledged snapshot, so reconnecting and re-fetching gives the
// identical picture.

import type { Snapshot, XY } from './types';

export interface LayerToggles {
  groundTruth: boolean; // hidden by default: the operator walks blind
  suggestedPath: boolean;
  walkedPath: boolean;
  pendingPoints: boolean;
  constellation: boolean;
  floorPlan: boolean;
  poolStatus: boolean;
}

export const defaultToggles: LayerToggles = {
  groundTruth: false,
  suggestedPath: true,
  walkedPath: true,
  pendingPoints: true,
  constellation: true,
  floorPlan: true,
  poolStatus: true,
};

export interface StatusLine {
  from: XY;
  to: XY;
  good: boolean; // green = converged pool, red = needs another pass
}

export interface ViewModel {
  floorSize: { width: number; height: number };
  clock: number;
  open: boolean;
  walkerReported: XY;
  walkedPath: XY[];
  suggestedPaths: XY[][];
  pendingPoints: XY[];
  constellation: { id: string; at: XY }[];
  statusLines: StatusLine[];
  rooms: { id: string; geometry: XY[]; locked: boolean; source: string }[];
  passages: XY[][];
  entrances: XY[];
  blocks: XY[];
  trueAps: { id: string; at: XY }[];
  truePath: XY[];
  objectives: Snapshot['state']['objectives'];
  activeObjective: string | null;
}

export function buildViewModel(snapshot: Snapshot): ViewModel {
  const state = snapshot.state;
  const constellation = Object.entries(state.constellation).map(
    ([id, at]) => ({ id, at }),
  );
  const known = new Map(constellation.map((c) => [c.id, c.at]));

  const statusLines: StatusLine[] = [];
  for (const pool of state.pools) {
    const from = known.get(pool.pair[0]);
    if (!from || !pool.compound) continue;
    statusLines.push({
      from,
      to: [from[0] + pool.compound[0], from[1] + pool.compound[1]],
      good: pool.good,
    });
  }

  const components = state.floor_plan.components;
  return {
    floorSize: {
      width: snapshot.scenario.floor.width,
      height: snapshot.scenario.floor.height,
    },
    clock: state.clock,
    open: state.open,
    walkerReported: state.reported_path[state.reported_path.length - 1],
    walkedPath: state.reported_path,
    suggestedPaths: state.suggestions.paths ?? [],
    pendingPoints: state.suggestions.pending_points ?? [],
    constellation,
    statusLines,
    rooms: components
      .filter((c) => c.kind === 'room')
      .map((c) => ({ id: c.id, geometry: c.geometry, locked: c.locked, source: c.source })),
    passages: components.filter((c) => c.kind === 'passage').map((c) => c.geometry),
    entrances: components
      .filter((c) => c.kind === 'entrance')
      .map((c) => c.geometry[0]),
    blocks: state.floor_plan.blocks,
    trueAps: snapshot.scenario.floor.aps.map(([id, at]) => ({ id, at })),
    truePath: state.true_path,
    objectives: state.objectives,
    activeObjective: state.suggestions.objective,
  };
}
