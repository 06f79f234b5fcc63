// DOM glue: renders controller state into the page. No fusion math lives
// here beyond viewmodel's self-consistency re-check per result row.

import { createClient } from './api.js'
import { SessionController } from './controller.js'
import {
  barWidth,
  blendPreview,
  formatDelta,
  formatWeight,
  selfConsistent,
} from './viewmodel.js'

const base = (window as any).MIMOR_API_BASE || 'http://127.0.0.1:8000'
const controller = new SessionController(createClient(base))

const $ = (id: string) => document.getElementById(id) as HTMLElement

function showError(message: string | null): void {
  const banner = $('error-banner')
  banner.textContent = message ?? ''
  banner.style.display = message ? 'block' : 'none'
}

function engineBars(rsvs: Record<string, number>, engines: string[]): string {
  return engines
    .map(
      (e) => `
      <div class="bar-row">
        <span class="bar-label">${e}</span>
        <span class="bar"><span class="bar-fill" style="width:${barWidth(rsvs[e] ?? 0)}"></span></span>
        <span class="bar-value">${(rsvs[e] ?? 0).toFixed(3)}</span>
      </div>`,
    )
    .join('')
}

function membershipChips(membership: number[]): string {
  return membership
    .map((v, c) => `<span class="chip">c${c}: ${v.toFixed(2)}</span>`)
    .join(' ')
}

function renderResults(): void {
  const s = controller.state
  const box = $('results')
  if (!s.search) {
    box.innerHTML = ''
    return
  }
  const engines = s.weights?.engines ?? Object.keys(s.search.results[0]?.rsvs ?? {})
  box.innerHTML = s.search.results
    .map((hit) => {
      const consistent =
        s.weights && s.model
          ? selfConsistent(s.search!.mode, hit, engines, s.weights.weights, s.model.weights, s.model.p)
          : true
      return `
      <div class="hit" data-doc="${hit.doc_id}">
        <div class="hit-head">
          <span class="hit-rank">#${hit.rank}</span>
          <span class="hit-doc">${hit.doc_id}</span>
          <span class="hit-score">${hit.score.toFixed(6)}${consistent ? '' : ' ⚠ inconsistent'}</span>
        </div>
        ${engineBars(hit.rsvs, engines)}
        <div class="hit-meta">${membershipChips(hit.membership)}</div>
        <div class="hit-actions">
          <button class="judge" data-doc="${hit.doc_id}" data-judgment="relevant">relevant</button>
          <button class="judge" data-doc="${hit.doc_id}" data-judgment="nonrelevant">not relevant</button>
        </div>
      </div>`
    })
    .join('')
  box.querySelectorAll<HTMLButtonElement>('button.judge').forEach((btn) => {
    btn.disabled = controller.state.judging || controller.state.stale
    btn.addEventListener('click', () => {
      void judge(btn.dataset.doc!, btn.dataset.judgment as 'relevant' | 'nonrelevant')
    })
  })
}

function matrixTable(
  weights: number[][],
  engines: string[],
  deltas: number[][] | null,
): string {
  const k = weights[0]?.length ?? 0
  const header =
    '<tr><th></th>' +
    Array.from({ length: k }, (_, c) => `<th>c${c}</th>`).join('') +
    '</tr>'
  const rows = weights
    .map((row, sIdx) => {
      const cells = row
        .map((w, c) => {
          const delta = deltas?.[sIdx]?.[c] ?? 0
          const highlight = delta !== 0 ? (delta > 0 ? 'cell-up' : 'cell-down') : ''
          const deltaText = formatDelta(delta)
          const heat = Math.round(w * 255)
          return `<td class="cell ${highlight}" style="background: rgba(30,120,220,${(w * 0.5).toFixed(3)})">
            ${formatWeight(w)}${deltaText ? `<span class="delta">${deltaText}</span>` : ''}
          </td>`
        })
        .join('')
      return `<tr><th>${engines[sIdx] ?? `e${sIdx}`}</th>${cells}</tr>`
    })
    .join('')
  return `<table class="matrix">${header}${rows}</table>`
}

function renderPanels(): void {
  const s = controller.state
  if (!s.weights || !s.model) return
  const engines = s.weights.engines
  $('public-matrix').innerHTML = matrixTable(s.weights.weights, engines, s.publicDeltas)
  $('private-matrix').innerHTML = matrixTable(s.model.weights, engines, s.privateDeltas)
  $('blend-preview').innerHTML = matrixTable(
    blendPreview(s.model.weights, s.weights.weights, s.model.p),
    engines,
    null,
  )
  $('n-display').textContent = String(s.model.feedback_count)
  $('p-display').textContent = s.model.p.toFixed(3)
  const gauge = $('p-gauge-fill')
  gauge.style.width = barWidth(s.model.p)
  $('history').innerHTML = s.history
    .slice()
    .reverse()
    .map(
      (snap) =>
        `<li><code>${snap.label}</code> n=${snap.n} p=${snap.p.toFixed(3)}</li>`,
    )
    .join('')
}

function renderAll(): void {
  showError(controller.state.error)
  renderResults()
  renderPanels()
}

async function runSearch(): Promise<void> {
  const queryInput = $('query') as HTMLInputElement
  const userInput = $('user') as HTMLInputElement
  const validation = $('query-validation')
  const query = queryInput.value.trim()
  if (!query) {
    validation.textContent = 'Enter a query first.'
    return
  }
  validation.textContent = ''
  controller.state.user = userInput.value.trim() || 'guest'
  try {
    await controller.search(query)
  } catch (err: any) {
    controller.state.error = err?.message ?? String(err)
  }
  renderAll()
}

async function judge(docId: string, judgment: 'relevant' | 'nonrelevant'): Promise<void> {
  renderResults() // disable buttons while in flight
  try {
    await controller.judge(docId, judgment)
  } catch (err: any) {
    controller.state.error = err?.message ?? String(err)
  }
  renderAll()
}

export function init(): void {
  $('search-btn').addEventListener('click', () => void runSearch())
  ;($('query') as HTMLInputElement).addEventListener('keydown', (e) => {
    if ((e as KeyboardEvent).key === 'Enter') void runSearch()
  })
}

if (typeof document !== 'undefined' && document.getElementById('search-btn')) {
  init()
}
