/** Coordinated view state: one brush set shared by every view. */

import type { Stage } from "./types";

export interface EncodingChoice {
  color: string; // indicator column driving node color
  size: string; // indicator column driving node radius
}

export interface HeatmapSort {
  column: string;
  descending: boolean;
}

export type StateListener = (state: ViewState) => void;

export class ViewState {
  scenarioId: string | null = null;
  stage: Stage = "FN_s";
  selection: Set<string> = new Set();
  encoding: EncodingChoice = { color: "defaults", size: "stress" };
  heatmapSort: HeatmapSort = { column: "stress", descending: true };
  pendingCuts: { from: string; to: string }[] = [];

  private listeners: StateListener[] = [];

  subscribe(listener: StateListener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this);
  }

  setScenario(id: string): void {
    this.scenarioId = id;
    this.selection.clear();
    this.pendingCuts = [];
    this.emit();
  }

  setStage(stage: Stage): void {
    this.stage = stage;
    this.emit();
  }

  /** Replace the brush set; all coordinated views re-render from it. */
  brush(ids: Iterable<string>): void {
    this.selection = new Set(ids);
    this.emit();
  }

  clearBrush(): void {
    this.selection.clear();
    this.emit();
  }

  setEncoding(encoding: Partial<EncodingChoice>): void {
    this.encoding = { ...this.encoding, ...encoding };
    this.emit();
  }

  /** Click-to-sort: clicking the active column toggles the direction. */
  sortHeatmapBy(column: string): void {
    if (this.heatmapSort.column === column) {
      this.heatmapSort = { column, descending: !this.heatmapSort.descending };
    } else {
      this.heatmapSort = { column, descending: true };
    }
    this.emit();
  }

  toggleCut(from: string, to: string): void {
    const at = this.pendingCuts.findIndex((c) => c.from === from && c.to === to);
    if (at >= 0) {
      this.pendingCuts.splice(at, 1);
    } else {
      this.pendingCuts.push({ from, to });
    }
    this.emit();
  }

  clearCuts(): void {
    this.pendingCuts = [];
    this.emit();
  }
}
