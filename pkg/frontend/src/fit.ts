export interface Point {
  x: number;
  y: number;
}

export interface FitResult {
  slope: number;
  intercept: number;
}

export function leastSquares(xs: number[], ys: number[]): FitResult {
  const n = xs.length;
  if (n < 2) {
    throw new Error("need at least two points to fit a line");
  }
  const mx = xs.reduce((a, b) => a + b, 0) / n;
  const my = ys.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const slope = sxy / sxx;
  return { slope, intercept: my - slope * mx };
}

/**
 * Least squares on (log10 x, log10 y), discarding every point at the
 * smallest x (the noise-dominated lowest sample count).
 */
export function logLogSlopeFit(points: Point[]): FitResult {
  const xMin = Math.min(...points.map((p) => p.x));
  const kept = points.filter((p) => p.x > xMin);
  const used = kept.length >= 2 ? kept : points;
  return leastSquares(
    used.map((p) => Math.log10(p.x)),
    used.map((p) => Math.log10(p.y)),
  );
}
