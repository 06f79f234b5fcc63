// Session state machine between the API client and the DOM layer. Holds the
// last search (with its rsvs_token), the model panels, and the delta
// highlights; enforces one in-flight feedback request at a time.

import { ApiError, type Client } from './api.js'
import type { SearchResponse, UserModelResponse, WeightsResponse } from './types.js'
import { appendSnapshot, expectedP, weightDeltas, type Snapshot } from './viewmodel.js'

export interface SessionState {
  user: string
  search: SearchResponse | null
  model: UserModelResponse | null
  weights: WeightsResponse | null
  publicDeltas: number[][] | null
  privateDeltas: number[][] | null
  history: Snapshot[]
  judging: boolean
  error: string | null
  stale: boolean // token expired; the query must be re-run
}

export class SessionController {
  api: Client
  state: SessionState

  constructor(api: Client, user = 'guest') {
    this.api = api
    this.state = {
      user,
      search: null,
      model: null,
      weights: null,
      publicDeltas: null,
      privateDeltas: null,
      history: [],
      judging: false,
      error: null,
      stale: false,
    }
  }

  async search(query: string): Promise<void> {
    const s = this.state
    s.error = null
    s.stale = false
    s.search = await this.api.search(query, s.user)
    await this.refreshModels('search')
    s.publicDeltas = null
    s.privateDeltas = null
  }

  async refreshModels(label: string): Promise<void> {
    const s = this.state
    const prevPublic = s.weights?.weights ?? null
    const prevPrivate = s.model?.weights ?? null
    s.weights = await this.api.weights()
    s.model = await this.api.model(s.user)
    s.publicDeltas = prevPublic ? weightDeltas(prevPublic, s.weights.weights) : null
    s.privateDeltas = prevPrivate ? weightDeltas(prevPrivate, s.model.weights) : null
    s.history = appendSnapshot(s.history, {
      label,
      publicWeights: s.weights.weights,
      privateWeights: s.model.weights,
      n: s.model.feedback_count,
      p: s.model.p,
    })
  }

  async judge(docId: string, judgment: 'relevant' | 'nonrelevant'): Promise<void> {
    const s = this.state
    if (s.judging || !s.search) return
    s.judging = true
    s.error = null
    try {
      await this.api.feedback({
        user: s.user,
        qid: s.search.query_id,
        doc: docId,
        judgment,
        rsvs_token: s.search.rsvs_token,
      })
      await this.refreshModels(`${judgment}:${docId}`)
    } catch (err) {
      if (err instanceof ApiError && err.status === 404 && err.message.includes('token')) {
        s.stale = true
        s.error = 'This result page has expired; re-run the query to judge.'
      } else {
        throw err
      }
    } finally {
      s.judging = false
    }
  }

  /** Sanity mirror of the server's schedule, for the p gauge label. */
  expectedBlend(): number | null {
    const s = this.state
    if (!s.model || !s.weights) return null
    return expectedP(s.model.feedback_count, s.weights.t_saturation)
  }
}
