export interface SearchHit {
  doc_id: string
  rank: number
  score: number
  rsvs: Record<string, number>
  membership: number[]
}

export interface SearchResponse {
  query_id: string
  user: string
  mode: string
  rsvs_token: string
  results: SearchHit[]
}

export interface UserModelResponse {
  user_id: string
  weights: number[][]
  feedback_count: number
  p: number
}

export interface WeightsResponse {
  engines: string[]
  k: number
  mode: string
  epsilon: number
  t_saturation: number
  weights: number[][]
  total_feedback: number
}

export interface FeedbackResponse {
  user: {
    user_id: string
    feedback_count: number
    p: number
    weights: number[][]
  }
  public: {
    weights: number[][]
    total_feedback: number
  }
}

export interface ClusterResponse {
  doc_id: string
  membership: number[]
}

export interface FeedbackRequest {
  user: string
  qid: string
  doc: string
  judgment: 'relevant' | 'nonrelevant'
  rsvs_token: string
}
