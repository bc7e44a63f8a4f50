/**
 * Node bindings for the mafs feature-selection core.
 *
 * The bindings contain no computation: arrays are marshalled into the
 * core's file formats, the command line runs, and its outputs are parsed
 * back, so every result is identical to an equivalent CLI invocation.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { SelectionConfig, validateConfig } from "./config.js";
import {
  CoverageReport,
  GroundTruth,
  RankingRecord,
  matrixToCsv,
  parseCoverageReport,
  parseMatrixCsv,
  parseRankingTsv,
  parseTargetCsv,
  rankingToTsv,
  targetToCsv,
} from "./formats.js";
import { RuntimeOptions, runCore, withWorkdir } from "./runner.js";

export type {
  CoverageReport,
  GroundTruth,
  RankingRecord,
  RuntimeOptions,
  SelectionConfig,
};
export { selectionConfigSchema, validateConfig } from "./config.js";

export interface SimulateOptions {
  n: number;
  d: number;
  featureType?: "continuous" | "categorical" | "combined";
  outcomeType?: "continuous" | "binary";
  seed: number;
  /** Seven effect sizes: linear, cosine, log, cubic, exp, combined, interaction. */
  beta?: number[];
  betaCategorical?: number[];
}

export interface SimulatedData {
  x: number[][];
  y: number[];
  truth: GroundTruth;
}

export function simulate(options: SimulateOptions, runtime?: RuntimeOptions): SimulatedData {
  if (!Number.isInteger(options.seed)) throw new Error("seed must be an integer");
  return withWorkdir((dir) => {
    const args = [
      "simulate",
      "--n", String(options.n),
      "--d", String(options.d),
      "--feature-type", options.featureType ?? "continuous",
      "--outcome-type", options.outcomeType ?? "continuous",
      "--seed", String(options.seed),
      "--out-dir", dir,
    ];
    if (options.beta) {
      if (options.beta.length !== 7) throw new Error("beta needs exactly 7 values");
      args.push("--beta", options.beta.join(","));
    }
    if (options.betaCategorical) {
      args.push("--beta-categorical", options.betaCategorical.join(","));
    }
    runCore(args, runtime);
    return {
      x: parseMatrixCsv(readFileSync(join(dir, "X.csv"), "utf8")),
      y: parseTargetCsv(readFileSync(join(dir, "y.csv"), "utf8")),
      truth: JSON.parse(readFileSync(join(dir, "truth.json"), "utf8")) as GroundTruth,
    };
  });
}

export function selectFeatures(
  x: number[][],
  y: number[],
  config: SelectionConfig,
  runtime?: RuntimeOptions,
): RankingRecord[] {
  const validated = validateConfig(config); // throws before any core call
  if (x.length !== y.length) {
    throw new Error(`x has ${x.length} rows but y has ${y.length} entries`);
  }
  const seed = (validated.seed as number | undefined) ?? 0;
  return withWorkdir((dir) => {
    const xPath = join(dir, "X.csv");
    const yPath = join(dir, "y.csv");
    const configPath = join(dir, "config.json");
    const outPath = join(dir, "ranking.tsv");
    writeFileSync(xPath, matrixToCsv(x));
    writeFileSync(yPath, targetToCsv(y));
    writeFileSync(configPath, JSON.stringify(validated));
    runCore(
      [
        "select",
        "--x", xPath,
        "--y", yPath,
        "--seed", String(seed),
        "--config", configPath,
        "--out", outPath,
      ],
      runtime,
    );
    return parseRankingTsv(readFileSync(outPath, "utf8"));
  });
}

export function scoreCoverage(
  selected: number[],
  truth: GroundTruth,
  runtime?: RuntimeOptions,
): CoverageReport {
  return withWorkdir((dir) => {
    const rankingPath = join(dir, "ranking.tsv");
    const truthPath = join(dir, "truth.json");
    const records: RankingRecord[] = selected.map((feature, i) => ({
      rank: i + 1,
      feature,
      score: selected.length - i,
      method: "external",
      heads: [],
      seed: 0,
      configDigest: "000000000000",
    }));
    writeFileSync(rankingPath, rankingToTsv(records));
    writeFileSync(truthPath, JSON.stringify(truth));
    const stdout = runCore(
      ["score", "--ranking", rankingPath, "--truth", truthPath],
      runtime,
    );
    return parseCoverageReport(JSON.parse(stdout));
  });
}
