// Wire types of the session API. The snapshot schema is the save-file schema.

export type XY = [number, number];

export interface Objective {
  kind: 'locate_aps' | 'refine_trajectories' | 'track_movement' | 'floor_plan';
  params: Record<string, unknown>;
}

export interface PoolStatus {
  pair: [string, string];
  signature: number;
  members: number;
  compound: XY | null;
  good: boolean;
}

export interface PlanComponent {
  id: string;
  kind: 'passage' | 'room' | 'entrance';
  geometry: XY[];
  width: number;
  locked: boolean;
  source: 'inferred' | 'corrected';
}

export interface Suggestions {
  objective: Objective['kind'] | null;
  paths?: XY[][];
  pending_points?: XY[];
  retrace?: [string, string, number][];
  gap_paths?: { pair: [string, string]; path: XY[] }[];
  track?: TrackedWalk;
}

export interface TrackedWalk {
  points: XY[];
  timestamps: number[];
  anchors?: [number, string][];
}

export interface SessionState {
  open: boolean;
  clock: number;
  true_position: XY;
  reported_path: XY[];
  true_path: XY[];
  marks: [string, number, number][];
  pools: PoolStatus[];
  constellation: Record<string, XY>;
  positioned: boolean;
  objectives: Objective[];
  completed: Objective[];
  floor_plan: { components: PlanComponent[]; blocks: XY[] };
  suggestions: Suggestions;
  tracked: TrackedWalk | null;
}

export interface Snapshot {
  version: number;
  scenario: {
    floor: { width: number; height: number; aps: [string, XY][] };
    [key: string]: unknown;
  };
  seed: number;
  events: Command[];
  state: SessionState;
}

export type Command =
  | { type: 'walk'; heading: number; distance: number }
  | { type: 'terminate' }
  | { type: 'close' }
  | { type: 'objectives'; objectives: Objective[] }
  | {
      type: 'correct';
      component_id: string;
      geometry?: XY[];
      kind?: PlanComponent['kind'];
      lock?: boolean;
    };
