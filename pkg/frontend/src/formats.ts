/**
 * Readers and writers for the core's file formats. Floats are stringified
 * with the runtime's shortest round-trip notation; the Python side parses
 * them back to the identical doubles.
 */

export interface RankingRecord {
  rank: number;
  feature: number;
  score: number;
  method: string;
  heads: number[];
  seed: number;
  configDigest: string;
}

export interface GroundTruth {
  sets: Record<string, number[]>;
  pairs: Array<[number, number]>;
}

export interface CoverageReport {
  overall: number;
  perForm: Record<string, number>;
  selectedCount: number;
  causalCount: number;
}

export function matrixToCsv(x: number[][]): string {
  if (x.length === 0 || x[0].length === 0) {
    throw new Error("feature matrix must be non-empty");
  }
  const d = x[0].length;
  const lines: string[] = [Array.from({ length: d }, (_, j) => `f${j}`).join(",")];
  for (const row of x) {
    if (row.length !== d) throw new Error("ragged feature matrix");
    lines.push(row.map(String).join(","));
  }
  return lines.join("\n") + "\n";
}

export function parseMatrixCsv(text: string): number[][] {
  const lines = text.trim().split("\n");
  const header = lines[0].split(",").length;
  return lines.slice(1).map((line) => {
    const row = line.split(",").map(Number);
    if (row.length !== header || row.some(Number.isNaN)) {
      throw new Error("malformed feature CSV");
    }
    return row;
  });
}

export function targetToCsv(y: number[]): string {
  return "y\n" + y.map(String).join("\n") + "\n";
}

export function parseTargetCsv(text: string): number[] {
  const lines = text.trim().split("\n");
  if (lines[0] !== "y") throw new Error("target CSV must have a single 'y' column");
  return lines.slice(1).map(Number);
}

export function parseRankingTsv(text: string): RankingRecord[] {
  const lines = text.trim().split("\n");
  const expected = "rank\tfeature\tscore\tmethod\theads\tseed\tconfig_digest";
  if (lines[0] !== expected) {
    throw new Error(`unexpected ranking columns: ${lines[0]}`);
  }
  return lines.slice(1).map((line) => {
    const [rank, feature, score, method, heads, seed, digest] = line.split("\t");
    return {
      rank: Number(rank),
      feature: Number(feature),
      score: Number(score),
      method,
      heads: heads === "-" ? [] : heads.split("|").map(Number),
      seed: Number(seed),
      configDigest: digest,
    };
  });
}

export function rankingToTsv(records: RankingRecord[]): string {
  const lines = ["rank\tfeature\tscore\tmethod\theads\tseed\tconfig_digest"];
  for (const r of records) {
    const heads = r.heads.length ? r.heads.join("|") : "-";
    lines.push(
      [r.rank, r.feature, String(r.score), r.method, heads, r.seed, r.configDigest].join("\t"),
    );
  }
  return lines.join("\n") + "\n";
}

export function parseCoverageReport(payload: Record<string, unknown>): CoverageReport {
  return {
    overall: payload.overall as number,
    perForm: payload.per_form as Record<string, number>,
    selectedCount: payload.selected_count as number,
    causalCount: payload.causal_count as number,
  };
}
