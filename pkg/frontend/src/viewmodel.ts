// Pure view logic. The only fusion math here is the blend preview and the
// self-consistency re-check of displayed numbers; every authoritative value
// comes from the service.

import type { SearchHit } from './types.js'

export function weightDeltas(prev: number[][], next: number[][]): number[][] {
  return next.map((row, s) => row.map((w, c) => w - (prev[s]?.[c] ?? w)))
}

export function blendPreview(priv: number[][], pub: number[][], p: number): number[][] {
  return priv.map((row, s) => row.map((w, c) => p * w + (1 - p) * pub[s][c]))
}

export function expectedP(n: number, t: number): number {
  return Math.min(1, n / t)
}

/** Recompute the fused score from the parts a result row displays. */
export function fusedFromParts(
  mode: string,
  hit: SearchHit,
  engines: string[],
  publicWeights: number[][],
  privateWeights: number[][] | null,
  p: number,
): number {
  const rsvs = engines.map((e) => hit.rsvs[e] ?? 0)
  const n = engines.length
  const k = publicWeights[0].length
  if (mode === 'flat' || mode === 'blended') {
    let total = 0
    for (let s = 0; s < n; s++) {
      const pub = publicWeights[s][0]
      const w =
        mode === 'blended' && privateWeights ? p * privateWeights[s][0] + (1 - p) * pub : pub
      total += w * rsvs[s]
    }
    return total / n
  }
  let total = 0
  for (let s = 0; s < n; s++) {
    for (let c = 0; c < k; c++) {
      const pub = publicWeights[s][c]
      const w =
        mode === 'blended-clustered' && privateWeights
          ? p * privateWeights[s][c] + (1 - p) * pub
          : pub
      total += w * hit.membership[c] * rsvs[s]
    }
  }
  return total / (k * n)
}

export function selfConsistent(
  mode: string,
  hit: SearchHit,
  engines: string[],
  publicWeights: number[][],
  privateWeights: number[][] | null,
  p: number,
  tol = 1e-9,
): boolean {
  const recomputed = fusedFromParts(mode, hit, engines, publicWeights, privateWeights, p)
  return Math.abs(recomputed - hit.score) <= tol
}

export function barWidth(value: number): string {
  const pct = Math.max(0, Math.min(1, value)) * 100
  return `${pct.toFixed(1)}%`
}

export function formatWeight(value: number): string {
  return value.toFixed(4)
}

export function formatDelta(value: number): string {
  if (value === 0) return ''
  const sign = value > 0 ? '+' : ''
  return `${sign}${value.toFixed(4)}`
}

export interface Snapshot {
  label: string
  publicWeights: number[][]
  privateWeights: number[][]
  n: number
  p: number
}

export function appendSnapshot(history: Snapshot[], snap: Snapshot, limit = 20): Snapshot[] {
  const next = [...history, snap]
  return next.length > limit ? next.slice(next.length - limit) : next
}
