import type {
  FeedbackRequest,
  FeedbackResponse,
  SearchResponse,
  UserModelResponse,
  WeightsResponse,
  ClusterResponse,
} from './types.js'

export class ApiError extends Error {
  code: string
  status: number

  constructor(code: string, message: string, status: number) {
    super(message)
    this.code = code
    this.status = status
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

async function asJson<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let code = 'internal'
    let message = `HTTP ${res.status}`
    try {
      const body = await res.json()
      if (body && typeof body.code === 'string') code = body.code
      if (body && typeof body.message === 'string') message = body.message
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(code, message, res.status)
  }
  return res.json() as Promise<T>
}

export function createClient(base: string, fetchImpl: FetchLike = fetch) {
  const get = <T>(path: string) => fetchImpl(`${base}${path}`).then((r) => asJson<T>(r))
  return {
    health(): Promise<{ status: string; doc_count: number }> {
      return get('/health')
    },

    search(q: string, user: string, k = 10, mode = ''): Promise<SearchResponse> {
      const params = new URLSearchParams({ q, user, k: String(k) })
      if (mode) params.set('mode', mode)
      return get(`/search?${params.toString()}`)
    },

    feedback(body: FeedbackRequest): Promise<FeedbackResponse> {
      return fetchImpl(`${base}/feedback`, {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(body),
      }).then((r) => asJson<FeedbackResponse>(r))
    },

    model(user: string): Promise<UserModelResponse> {
      return get(`/model/${encodeURIComponent(user)}`)
    },

    weights(): Promise<WeightsResponse> {
      return get('/weights')
    },

    clusters(docId: string): Promise<ClusterResponse> {
      return get(`/clusters/${encodeURIComponent(docId)}`)
    },
  }
}

export type Client = ReturnType<typeof createClient>
