import type { ApiClient } from "./api.js";
import { downsample, type ScatterPoint } from "./pareto.js";
import type { ConfigRow, ConfigsPayload } from "./types.js";

const MARGIN = 42;

interface PlacedPoint extends ScatterPoint {
  x: number;
  y: number;
}

/**
 * FPR/TPR scatter of every configuration with defined metrics, the
 * TPR >= min_tpr guide line, and the server's recommendation
 * highlighted. Click a point (or the recommended banner) to select;
 * selection is disabled until at least one label exists.
 */
export class Dashboard {
  private placed: PlacedPoint[] = [];
  private payload: ConfigsPayload | null = null;
  onStatus: (msg: string) => void = () => {};

  constructor(
    private api: ApiClient,
    private canvas: HTMLCanvasElement,
    private info: HTMLElement,
    private confirmFn: (msg: string) => boolean = (msg) => window.confirm(msg),
  ) {
    canvas.addEventListener("click", (ev) => void this.handleClick(ev));
  }

  async refresh(): Promise<void> {
    this.payload = await this.api.getConfigs();
    this.draw();
  }

  private definedPoints(): ScatterPoint[] {
    if (!this.payload) return [];
    return this.payload.configs
      .filter((c): c is ConfigRow & { tpr: number; fpr: number } =>
        typeof c.tpr === "number" && typeof c.fpr === "number")
      .map((c) => ({ config_id: c.config_id, fpr: c.fpr, tpr: c.tpr }));
  }

  private draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx || !this.payload) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    const plotW = width - 2 * MARGIN;
    const plotH = height - 2 * MARGIN;

    ctx.strokeStyle = "#888";
    ctx.strokeRect(MARGIN, MARGIN, plotW, plotH);
    ctx.fillStyle = "#444";
    ctx.font = "12px sans-serif";
    ctx.fillText("false positive rate →", width / 2 - 50, height - 10);
    ctx.save();
    ctx.translate(12, height / 2 + 50);
    ctx.rotate(-Math.PI / 2);
    ctx.fillText("true positive rate →", 0, 0);
    ctx.restore();

    const toX = (fpr: number) => MARGIN + fpr * plotW;
    const toY = (tpr: number) => MARGIN + (1 - tpr) * plotH;

    // TPR constraint guide
    const guideY = toY(this.payload.min_tpr);
    ctx.strokeStyle = "#c77";
    ctx.setLineDash([6, 4]);
    ctx.beginPath();
    ctx.moveTo(MARGIN, guideY);
    ctx.lineTo(MARGIN + plotW, guideY);
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = "#c77";
    ctx.fillText(`TPR ${this.payload.min_tpr}`, MARGIN + plotW - 64, guideY - 6);

    const points = this.definedPoints();
    const shown = downsample(points, 500);
    this.placed = shown.map((p) => ({ ...p, x: toX(p.fpr), y: toY(p.tpr) }));

    ctx.fillStyle = "rgba(70,110,180,0.55)";
    for (const p of this.placed) {
      ctx.beginPath();
      ctx.arc(p.x, p.y, 3, 0, 2 * Math.PI);
      ctx.fill();
    }

    const mark = (configId: number | null, color: string, radius: number) => {
      if (configId === null) return;
      const row = points.find((p) => p.config_id === configId);
      if (!row) return;
      ctx.strokeStyle = color;
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(toX(row.fpr), toY(row.tpr), radius, 0, 2 * Math.PI);
      ctx.stroke();
      ctx.lineWidth = 1;
    };
    mark(this.payload.recommended_config_id, "#1a7f1a", 7);
    mark(this.payload.selected_config_id, "#d4a017", 10);

    this.renderInfo(points.length, shown.length);
  }

  private renderInfo(defined: number, shown: number): void {
    if (!this.payload) return;
    const rec = this.payload.recommended_config_id;
    const parts = [
      `<span>${this.payload.configs.length} configs, ${defined} with metrics, ${shown} plotted</span>`,
    ];
    if (this.payload.selection_warning) {
      parts.push(`<span class="warn">${this.payload.selection_warning}</span>`);
    }
    if (rec !== null) {
      const row = this.payload.configs[rec];
      parts.push(
        `<button id="accept-recommended">select recommended #${rec} ` +
        `(q=${row.quantile}, FPR=${row.fpr?.toFixed(3)}, TPR=${row.tpr?.toFixed(3)})</button>`,
      );
    } else if (defined === 0) {
      parts.push("<span class=\"warn\">selection disabled: label at least one match " +
                 "and one non-match first</span>");
    }
    if (this.payload.selected_config_id !== null) {
      parts.push(`<span class="selected">selected: #${this.payload.selected_config_id}</span>`);
    }
    this.info.innerHTML = parts.join(" ");
    const btn = this.info.querySelector<HTMLButtonElement>("#accept-recommended");
    if (btn && rec !== null) {
      btn.addEventListener("click", () => void this.select(rec));
    }
  }

  private async handleClick(ev: MouseEvent): Promise<void> {
    const rect = this.canvas.getBoundingClientRect();
    const x = (ev.clientX - rect.left) * (this.canvas.width / rect.width);
    const y = (ev.clientY - rect.top) * (this.canvas.height / rect.height);
    let best: PlacedPoint | null = null;
    let bestDist = 64; // 8px capture radius, squared
    for (const p of this.placed) {
      const d = (p.x - x) ** 2 + (p.y - y) ** 2;
      if (d < bestDist) {
        best = p;
        bestDist = d;
      }
    }
    if (best) {
      await this.select(best.config_id);
    }
  }

  async select(configId: number): Promise<void> {
    const row = this.payload?.configs[configId];
    const desc = row
      ? `config #${configId} (q=${row.quantile}, FPR=${row.fpr?.toFixed(3) ?? "?"}, ` +
        `TPR=${row.tpr?.toFixed(3) ?? "?"})`
      : `config #${configId}`;
    if (!this.confirmFn(`Select ${desc} as the operating configuration?`)) {
      return;
    }
    try {
      await this.api.selectConfig(configId);
      this.onStatus(`selected config #${configId}; chosen_config.json written`);
      await this.refresh();
    } catch (err) {
      this.onStatus(`selection failed: ${(err as Error).message}`);
    }
  }
}
