/** Shapes of the tuning-service API payloads (the only data source). */

export interface RecordView {
  kind: "resident" | "contact";
  id: string;
  name: string;
  components: string[];
  age: number | null;
  sex: string | null;
  village: string | null;
  household?: string | null;
  namer?: string;
  domain?: string;
}

export interface PairPayload {
  pair_id: string;
  resident: RecordView | null;
  contact: RecordView | null;
  sims: Record<string, number | null>;
  score: number | null;
  classified_fraction: number;
  label: string | null;
}

export interface PairList {
  total: number;
  offset: number;
  pairs: PairPayload[];
}

export interface SessionInfo {
  session_id: string;
  community_id: string;
  n_pairs: number;
  n_configs: number;
  quantile_grid: number[];
  labeled: number;
  labeled_definite: number;
  unsure: number;
  progress: number;
  selected_config_id: number | null;
  warnings: string[];
}

export interface ConfigRow {
  config_id: number;
  weights: number[];
  quantile: number;
  tp?: number;
  fp?: number;
  fn?: number;
  tn?: number;
  tpr?: number | null;
  fpr?: number | null;
  labeled_coverage?: number | null;
}

export interface ConfigsPayload {
  configs: ConfigRow[];
  recommended_config_id: number | null;
  selection_warning: string | null;
  min_tpr: number;
  selected_config_id: number | null;
}

export type Label = "match" | "nonmatch" | "unsure";

export const SIM_FIELDS = [
  "first", "middle", "last", "age", "village", "sex", "honorific",
] as const;
