// Drag-reorderable objective list. Every edit POSTs the full new list; the
// rendered order always comes back from the acknowledged snapshot.

import type { SessionClient } from './api';
import type { Objective } from './types';

export function objectiveLabel(objective: Objective): string {
  switch (objective.kind) {
    case 'locate_aps':
      return 'Locate APs';
    case 'refine_trajectories':
      return 'Refine trajectories';
    case 'track_movement':
      return 'Track movement';
    case 'floor_plan':
      return 'Floor plan';
  }
}

export function reorder<T>(items: T[], from: number, to: number): T[] {
  const out = items.slice();
  const [moved] = out.splice(from, 1);
  out.splice(to, 0, moved);
  return out;
}

export class ObjectiveListEditor {
  private objectives: Objective[] = [];
  private dragIndex: number | null = null;

  constructor(
    private root: HTMLElement,
    private client: SessionClient,
    private onChanged: () => Promise<void>,
    private onError: (message: string) => void = () => {},
  ) {}

  setObjectives(objectives: Objective[]): void {
    this.objectives = objectives;
    this.renderList();
  }

  private async post(next: Objective[]): Promise<void> {
    try {
      await this.client.postCommand({ type: 'objectives', objectives: next });
      await this.onChanged();
    } catch (err) {
      this.onError(err instanceof Error ? err.message : String(err));
      this.renderList(); // fall back to the acknowledged order
    }
  }

  moveTo(from: number, to: number): Promise<void> {
    return this.post(reorder(this.objectives, from, to));
  }

  remove(index: number): Promise<void> {
    const next = this.objectives.slice();
    next.splice(index, 1);
    return this.post(next);
  }

  add(objective: Objective): Promise<void> {
    return this.post([...this.objectives, objective]);
  }

  private renderList(): void {
    this.root.textContent = '';
    if (this.objectives.length === 0) {
      const idle = document.createElement('li');
      idle.className = 'idle';
      idle.textContent = 'No objectives — engine idle';
      this.root.appendChild(idle);
      return;
    }
    this.objectives.forEach((objective, index) => {
      const li = document.createElement('li');
      li.draggable = true;
      li.dataset.index = String(index);
      li.className = index === 0 ? 'objective active' : 'objective';
      li.textContent = `${index + 1}. ${objectiveLabel(objective)}`;

      li.addEventListener('dragstart', () => {
        this.dragIndex = index;
      });
      li.addEventListener('dragover', (ev) => ev.preventDefault());
      li.addEventListener('drop', (ev) => {
        ev.preventDefault();
        if (this.dragIndex !== null && this.dragIndex !== index) {
          void this.moveTo(this.dragIndex, index);
        }
        this.dragIndex = null;
      });

      const up = document.createElement('button');
      up.textContent = '↑';
      up.disabled = index === 0;
      up.addEventListener('click', () => void this.moveTo(index, index - 1));
      const down = document.createElement('button');
      down.textContent = '↓';
      down.disabled = index === this.objectives.length - 1;
      down.addEventListener('click', () => void this.moveTo(index, index + 1));
      const del = document.createElement('button');
      del.textContent = '✕';
      del.addEventListener('click', () => void this.remove(index));

      li.append(' ', up, down, del);
      this.root.appendChild(li);
    });
  }
}
