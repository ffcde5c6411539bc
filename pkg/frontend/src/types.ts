// API payload shapes, mirroring the service's wire format.

export interface SessionSummary {
  id: string;
  appName: string;
  virtuality: string;
  users: string[];
  recordingStart: string;
  recordingEnd: string;
  records: number;
  anonymized: boolean;
}

export interface SessionDetail extends SessionSummary {
  actionNames: string[];
  assetCount: number;
  hasInsights: boolean;
}

export interface TransformOut {
  pos: number[];
  rot: number[];
}

export interface AssetOut {
  kind: string;
  path: string;
  sha256: string;
  url: string;
}

export interface ActionOut {
  id: string;
  name: string;
  type: string;
  intent: string;
  intentEstimated: boolean;
  user: string;
  location: TransformOut[];
  triggerSource: string;
  startTime: string;
  duration: string;
  durationSeconds: number;
  referent: AssetOut[];
  referentName: string;
  referentType: string;
  referentLocation: TransformOut[];
  context: AssetOut[];
  contextDescription: string | null;
  contextType: string;
  transcript: string | null;
}

export interface TimelineOut {
  rows: { user: string; action: string }[];
  bins: { start: string; end: string }[];
  counts: number[][];
  binSize: string;
}

export interface TracePointOut {
  pos: number[];
  user: string;
  action: string;
  count: number;
  actionIds: string[];
}

export interface StatsOut {
  referents: { user: string; referent: string; count: number; totalSeconds: number }[];
  durations: { user: string; action: string; seconds: number[] }[];
  approximate: boolean;
}

export interface InsightOut {
  id: string;
  title: string;
  body: string;
  aspect: string;
  sourceAgent: string;
  confidence: number | null;
  markerActionIds: string[];
}

export interface MarkerOut {
  actionId: string;
  timestamp: string;
  insightIds: string[];
}

export interface InsightsPayload {
  status: string; // none | running | ready
  aoi: string;
  mode: string;
  insights: InsightOut[];
  markers: MarkerOut[];
  job?: { jobId: string; status: string; error: string | null } | null;
}
