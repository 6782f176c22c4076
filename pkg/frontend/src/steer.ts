// Steering: click a waypoint or hold an arrow key; either way the walker
// advances through POSTed walk commands at a fixed cadence. Headings are
// computed from the last acknowledged snapshot, never from a local guess.

import type { SessionClient } from './api';
import type { XY } from './types';

export const STEP_PER_TICK = 1.0;
export const TICK_MS = 120;

const KEY_HEADINGS: Record<string, number> = {
  ArrowRight: 0,
  ArrowUp: 90,
  ArrowLeft: 180,
  ArrowDown: 270,
};

export function headingTo(from: XY, to: XY): number {
  const deg = (Math.atan2(to[1] - from[1], to[0] - from[0]) * 180) / Math.PI;
  return (deg + 360) % 360;
}

export class SteerController {
  private waypoint: XY | null = null;
  private heldHeading: number | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private busy = false;
  enabled = true;

  constructor(
    private client: SessionClient,
    private currentPosition: () => XY,
    private onStep: () => Promise<void>,
    private onError: (message: string) => void = () => {},
  ) {}

  start(): void {
    if (this.timer === null) {
      this.timer = setInterval(() => void this.tick(), TICK_MS);
    }
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  setWaypoint(p: XY): void {
    this.waypoint = p;
  }

  clearWaypoint(): void {
    this.waypoint = null;
  }

  keyDown(key: string): void {
    if (key in KEY_HEADINGS) {
      this.heldHeading = KEY_HEADINGS[key];
      this.waypoint = null;
    }
  }

  keyUp(key: string): void {
    if (key in KEY_HEADINGS && this.heldHeading === KEY_HEADINGS[key]) {
      this.heldHeading = null;
    }
  }

  /** One cadence tick; exposed for tests so they can drive it synchronously. */
  async tick(): Promise<void> {
    if (!this.enabled || this.busy) return;
    let heading: number | null = this.heldHeading;
    let distance = STEP_PER_TICK;
    if (heading === null && this.waypoint) {
      const pos = this.currentPosition();
      const dx = this.waypoint[0] - pos[0];
      const dy = this.waypoint[1] - pos[1];
      const remaining = Math.hypot(dx, dy);
      if (remaining < 0.25) {
        this.waypoint = null;
        return;
      }
      heading = headingTo(pos, this.waypoint);
      distance = Math.min(STEP_PER_TICK, remaining);
    }
    if (heading === null) return;
    this.busy = true;
    try {
      await this.client.postCommand({ type: 'walk', heading, distance });
      await this.onStep();
    } catch (err) {
      this.waypoint = null;
      this.heldHeading = null;
      this.onError(err instanceof Error ? err.message : String(err));
    } finally {
      this.busy = false;
    }
  }

  /** Walk a whole suggested path by chaining waypoints; resolves when done. */
  async followPath(path: XY[], maxTicks = 10_000): Promise<void> {
    for (const vertex of path) {
      this.setWaypoint(vertex);
      let ticks = 0;
      while (this.waypoint !== null) {
        await this.tick();
        if (++ticks > maxTicks) throw new Error('waypoint unreachable');
      }
    }
  }
}
