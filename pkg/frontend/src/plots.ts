/**
 * The three figure types rendered from harness outputs.
 *
 * trajectories: overlay of PDE-extracted and ODE-integrated vortex tracks,
 * torus unwrap-aware, charges color-coded, first-collision markers.
 * convergence: the D(eps) table of a compare report on log axes with the
 * monotonicity annotation.
 * energy: F_eps(t) with an inset of the energy-balance residual.
 */

import { readFileSync } from "fs";
import {
  SchemaError,
  Sidecar,
  TrajectoryFile,
  checkCompatible,
  column,
  readCsv,
  readSidecar,
  readTrajectory,
  unwrapTrack,
} from "./data.js";
import { Axes, Figure, extent } from "./svg.js";

const CHARGE_COLORS: Record<string, string> = {
  "1": "#c0392b",
  "-1": "#2471a3",
};
const chargeColor = (c: number) => CHARGE_COLORS[String(c)] ?? "#7d3c98";

export function plotTrajectories(paths: string[]): string {
  if (paths.length === 0) throw new SchemaError("trajectories figure needs at least one track CSV");
  const files: TrajectoryFile[] = paths.map(readTrajectory);
  checkCompatible(files.map((f) => f.sidecar));
  const fig = new Figure(720, 520);
  const surface = files[0].sidecar.surface;

  const allTracks = files.flatMap((f) =>
    f.tracks.map((t) => ({ track: unwrapTrack(t, surface), file: f }))
  );
  if (allTracks.length === 0) {
    const ax = new Axes(fig, {
      x0: 70, y0: 40, w: 600, h: 420,
      xExtent: { min: 0, max: 1 }, yExtent: { min: 0, max: 1 },
      xLabel: "x1", yLabel: "x2", title: "vortex trajectories",
    });
    void ax;
    fig.text(280, 250, "no tracks in input", 'fill="#888" font-size="16"');
    return fig.render();
  }
  const xs = allTracks.flatMap((t) => t.track.x1);
  const ys = allTracks.flatMap((t) => t.track.x2);
  const ax = new Axes(fig, {
    x0: 70, y0: 40, w: 600, h: 420,
    xExtent: extent(xs), yExtent: extent(ys),
    xLabel: "x1", yLabel: "x2", title: "vortex trajectories (PDE vs ODE)",
  });
  for (const { track, file } of allTracks) {
    const prov = file.sidecar.provenance ?? "?";
    const dash = prov === "ode" ? "6,4" : "";
    ax.polyline(track.x1, track.x2, chargeColor(track.charge), dash);
    if (prov !== "ode") {
      ax.markers(track.x1, track.x2, chargeColor(track.charge), 2.2);
    }
    if (file.sidecar.collided && track.x1.length > 0) {
      ax.cross(track.x1[track.x1.length - 1], track.x2[track.x2.length - 1], "#222");
    }
  }
  let y = 58;
  for (const f of files) {
    const prov = f.sidecar.provenance ?? "?";
    const eps = f.sidecar.eps != null ? `, eps=${f.sidecar.eps}` : "";
    const tstar = f.sidecar.collided ? `, T*=${Number(f.sidecar.t_star).toPrecision(4)}` : "";
    fig.text(88, y, `${prov}${eps}${tstar} ${prov === "ode" ? "(dashed)" : "(dotted line markers)"}`);
    y += 16;
  }
  fig.text(88, y, "charge +1 red, -1 blue; X marks first collision");
  return fig.render();
}

interface CompareRow {
  eps: number;
  D: number;
}

export function plotConvergence(reportPath: string): string {
  const report = JSON.parse(readFileSync(reportPath, "utf8"));
  if (!Array.isArray(report.rows)) throw new SchemaError("missing column 'rows' in compare report");
  const rows: CompareRow[] = report.rows.map((r: Record<string, unknown>) => {
    if (typeof r.eps !== "number") throw new SchemaError("missing column 'eps' in compare report row");
    if (typeof r.D !== "number") throw new SchemaError("missing column 'D' in compare report row");
    return { eps: r.eps, D: r.D };
  });
  const fig = new Figure(640, 460);
  const epsList = rows.map((r) => r.eps);
  const ds = rows.map((r) => r.D);
  const ax = new Axes(fig, {
    x0: 80, y0: 50, w: 500, h: 330,
    xExtent: { min: Math.min(...epsList) / 1.3, max: Math.max(...epsList) * 1.3 },
    yExtent: { min: Math.min(...ds) / 1.5, max: Math.max(...ds) * 1.5 },
    xLabel: "eps", yLabel: "D(eps)", logX: true, logY: true,
    title: "trajectory deviation vs eps",
  });
  const order = [...rows].sort((a, b) => a.eps - b.eps);
  if (order.length >= 2) {
    ax.polyline(order.map((r) => r.eps), order.map((r) => r.D), "#666", "4,3", 1.2);
  }
  ax.markers(epsList, ds, "#1a5276", 4.5);
  const verdict = report.D_monotone_decreasing;
  const note =
    verdict === null || verdict === undefined
      ? "single eps: no monotonicity verdict"
      : `D strictly decreasing in eps: ${verdict}`;
  fig.text(90, 416, note, 'font-weight="bold"');
  if (typeof report.t_star_ode === "number") {
    fig.text(90, 434, `ODE first-collision time T* = ${report.t_star_ode.toPrecision(5)}`);
  }
  return fig.render();
}

export function plotEnergy(diagnosticsPath: string): string {
  const csv = readCsv(diagnosticsPath);
  const meta: Sidecar = readSidecar(diagnosticsPath);
  const t = column(csv, "t");
  const f = column(csv, "F_eps");
  const diss = column(csv, "dissipation");
  const fig = new Figure(720, 480);
  const ax = new Axes(fig, {
    x0: 80, y0: 50, w: 430, h: 360,
    xExtent: extent(t), yExtent: extent(f),
    xLabel: "t", yLabel: "F_eps", title: `energy along the flow (${meta.provenance ?? "?"})`,
  });
  ax.polyline(t, f, "#1a5276");
  ax.markers(t, f, "#1a5276", 2);
  // inset: balance residual F(0) - F(t) - dissipation(t)
  const resid = t.map((_, i) => f[0] - f[i] - diss[i]);
  const inset = new Axes(fig, {
    x0: 545, y0: 80, w: 150, h: 120,
    xExtent: extent(t), yExtent: extent(resid),
    xLabel: "t", yLabel: "balance residual",
  });
  inset.polyline(t, resid, "#b03a2e");
  const total = Math.max(...diss.map(Math.abs), 1e-300);
  const rel = Math.max(...resid.map(Math.abs)) / total;
  fig.text(545, 240, `max residual / dissipation = ${(100 * rel).toPrecision(3)}%`);
  return fig.render();
}
