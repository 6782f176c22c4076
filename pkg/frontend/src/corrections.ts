// Component correction panel: select a floor-plan component, resize or retype
// it, optionally lock. Locked components are display-only.

import type { SessionClient } from './api';
import type { PlanComponent, XY } from './types';

export interface CorrectionDraft {
  componentId: string;
  geometry: XY[];
  kind: PlanComponent['kind'];
  lock: boolean;
}

export function resizeRectangle(geometry: XY[], dw: number, dh: number): XY[] {
  const xs = geometry.map((p) => p[0]);
  const ys = geometry.map((p) => p[1]);
  const x0 = Math.min(...xs);
  const y0 = Math.min(...ys);
  const x1 = Math.max(...xs) + dw;
  const y1 = Math.max(...ys) + dh;
  return [
    [x0, y0],
    [x1, y0],
    [x1, y1],
    [x0, y1],
  ];
}

export class CorrectionPanel {
  selected: PlanComponent | null = null;

  constructor(
    private client: SessionClient,
    private onApplied: () => Promise<void>,
    private onError: (message: string) => void = () => {},
  ) {}

  select(component: PlanComponent | null): void {
    this.selected = component;
  }

  get canEdit(): boolean {
    return this.selected !== null && !this.selected.locked;
  }

  async apply(draft: Omit<CorrectionDraft, 'componentId'>): Promise<boolean> {
    if (!this.selected) return false;
    if (this.selected.locked) {
      this.onError(`component ${this.selected.id} is locked`);
      return false;
    }
    try {
      await this.client.postCommand({
        type: 'correct',
        component_id: this.selected.id,
        geometry: draft.geometry,
        kind: draft.kind,
        lock: draft.lock,
      });
      await this.onApplied();
      return true;
    } catch (err) {
      this.onError(err instanceof Error ? err.message : String(err));
      return false;
    }
  }
}
