import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface RuntimeOptions {
  /** Python interpreter with the core installed; MAFS_PYTHON overrides. */
  python?: string;
  /** Extra environment variables for the core process. */
  env?: Record<string, string>;
}

export function pythonBin(options?: RuntimeOptions): string {
  return options?.python ?? process.env.MAFS_PYTHON ?? "python3";
}

export function runCore(args: string[], options?: RuntimeOptions): string {
  const proc = spawnSync(pythonBin(options), ["-m", "mafs", ...args], {
    encoding: "utf8",
    env: { ...process.env, ...options?.env },
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) {
    throw new Error(`failed to launch the core: ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    const detail = proc.stderr.trim() || proc.stdout.trim();
    throw new Error(`core exited with status ${proc.status}: ${detail}`);
  }
  return proc.stdout;
}

export function withWorkdir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "mafs-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
