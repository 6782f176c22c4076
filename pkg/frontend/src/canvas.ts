// Map canvas: draws the view model layer by layer. The 2D context is passed
// in so tests can hand it a recorder instead of a real canvas.

import type { LayerToggles, ViewModel } from './viewmodel';
import type { XY } from './types';

export interface Ctx2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  setLineDash(dash: number[]): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
}

const COLORS = {
  suggested: '#888888',
  walked: '#1565c0',
  pending: '#f9a825',
  ap: '#2e7d32',
  trueAp: '#9e9e9e',
  room: '#90caf9',
  lockedRoom: '#7b1fa2',
  passage: '#bdbdbd',
  entrance: '#2e7d32',
  block: '#c62828',
  good: '#2e7d32',
  bad: '#c62828',
};

export class MapView {
  margin = 16;

  constructor(
    private ctx: Ctx2D,
    private widthPx: number,
    private heightPx: number,
  ) {}

  private scaleFor(vm: ViewModel): number {
    return Math.min(
      (this.widthPx - 2 * this.margin) / vm.floorSize.width,
      (this.heightPx - 2 * this.margin) / vm.floorSize.height,
    );
  }

  toScreen(vm: ViewModel, p: XY): XY {
    const s = this.scaleFor(vm);
    return [
      this.margin + p[0] * s,
      this.heightPx - this.margin - p[1] * s,
    ];
  }

  toFloor(vm: ViewModel, px: number, py: number): XY {
    const s = this.scaleFor(vm);
    return [(px - this.margin) / s, (this.heightPx - this.margin - py) / s];
  }

  private polyline(vm: ViewModel, pts: XY[], close = false): void {
    if (pts.length === 0) return;
    this.ctx.beginPath();
    const [x0, y0] = this.toScreen(vm, pts[0]);
    this.ctx.moveTo(x0, y0);
    for (const p of pts.slice(1)) {
      const [x, y] = this.toScreen(vm, p);
      this.ctx.lineTo(x, y);
    }
    if (close) this.ctx.closePath();
  }

  private dot(vm: ViewModel, p: XY, r: number): void {
    const [x, y] = this.toScreen(vm, p);
    this.ctx.beginPath();
    this.ctx.arc(x, y, r, 0, 2 * Math.PI);
    this.ctx.fill();
  }

  render(vm: ViewModel, toggles: LayerToggles): void {
    const ctx = this.ctx;
    ctx.clearRect(0, 0, this.widthPx, this.heightPx);
    ctx.globalAlpha = 1;
    ctx.setLineDash([]);

    // floor outline
    ctx.strokeStyle = '#444444';
    ctx.lineWidth = 1;
    this.polyline(
      vm,
      [
        [0, 0],
        [vm.floorSize.width, 0],
        [vm.floorSize.width, vm.floorSize.height],
        [0, vm.floorSize.height],
      ],
      true,
    );
    ctx.stroke();

    if (toggles.floorPlan) {
      for (const room of vm.rooms) {
        ctx.strokeStyle = room.locked ? COLORS.lockedRoom : COLORS.room;
        ctx.fillStyle = COLORS.room;
        ctx.globalAlpha = 0.25;
        this.polyline(vm, room.geometry, true);
        ctx.fill();
        ctx.globalAlpha = 1;
        ctx.lineWidth = room.locked ? 3 : 1.5;
        ctx.stroke();
      }
      ctx.strokeStyle = COLORS.passage;
      ctx.lineWidth = 1;
      for (const passage of vm.passages) {
        this.polyline(vm, passage);
        ctx.stroke();
      }
      ctx.fillStyle = COLORS.entrance;
      for (const e of vm.entrances) this.dot(vm, e, 4);
      ctx.fillStyle = COLORS.block;
      for (const b of vm.blocks) this.dot(vm, b, 4);
    }

    if (toggles.suggestedPath) {
      ctx.strokeStyle = COLORS.suggested;
      ctx.lineWidth = 1;
      ctx.setLineDash([6, 4]);
      for (const path of vm.suggestedPaths) {
        this.polyline(vm, path);
        ctx.stroke();
      }
      ctx.setLineDash([]);
    }

    if (toggles.pendingPoints) {
      ctx.fillStyle = COLORS.pending;
      for (const p of vm.pendingPoints) this.dot(vm, p, 3);
    }

    if (toggles.walkedPath) {
      ctx.strokeStyle = COLORS.walked;
      ctx.lineWidth = 2;
      this.polyline(vm, vm.walkedPath);
      ctx.stroke();
      ctx.fillStyle = COLORS.walked;
      this.dot(vm, vm.walkerReported, 5);
    }

    if (toggles.poolStatus) {
      ctx.lineWidth = 2;
      for (const line of vm.statusLines) {
        ctx.strokeStyle = line.good ? COLORS.good : COLORS.bad;
        this.polyline(vm, [line.from, line.to]);
        ctx.stroke();
      }
    }

    if (toggles.constellation) {
      ctx.fillStyle = COLORS.ap;
      ctx.font = '10px sans-serif';
      for (const ap of vm.constellation) {
        this.dot(vm, ap.at, 4);
        const [x, y] = this.toScreen(vm, ap.at);
        ctx.fillText(ap.id, x + 6, y - 6);
      }
    }

    if (toggles.groundTruth) {
      ctx.fillStyle = COLORS.trueAp;
      ctx.globalAlpha = 0.6;
      for (const ap of vm.trueAps) this.dot(vm, ap.at, 3);
      ctx.strokeStyle = COLORS.trueAp;
      ctx.lineWidth = 1;
      this.polyline(vm, vm.truePath);
      ctx.stroke();
      ctx.globalAlpha = 1;
    }
  }
}
