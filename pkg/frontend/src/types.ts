/** Documents exchanged with the /v1 service API. */

export type Stage = "FN_o" | "FN_s" | "FN_i" | "FN_is";

export interface NetworkSummary {
  n: number;
  edges: number;
  total_exposure: number;
  total_buffer: number;
  stage: string;
}

export interface SystemRisk {
  concentration: number;
  fragility: number;
  max_stress: number;
  total_defaults: number;
  total_loss: number;
  total_stress: number;
}

export interface PropagationSummary {
  rounds: number;
  converged: boolean;
  final_stress: number[];
  losses: number[];
  defaulted: boolean[];
  additional_defaults: number[];
}

export interface ShockResponse {
  scenario_id: string;
  network_id: string;
  fn_s_summary: NetworkSummary;
  result: PropagationSummary;
  system_risk: SystemRisk;
}

export interface MetricsResponse {
  stage: Stage;
  ids: string[];
  columns: string[];
  raw: number[][];
  normalized: number[][];
}

export interface LayoutNode {
  id: string;
  x: number;
  y: number;
  r: number;
  island: number;
}

export interface LayoutEdge {
  from: string;
  to: string;
  amount: number;
  points: [number, number][];
}

export interface IslandProfile {
  kind: string;
  threat: number;
  label: number;
  member_ids: string[];
  profile: Record<string, number>;
}

export interface LayoutResponse {
  positions: LayoutNode[];
  edges: LayoutEdge[];
  islands: IslandProfile[];
  kl_trace: number[];
}

export interface Operation {
  kind: "remove_node" | "cut_edge";
  id?: string;
  from?: string;
  to?: string;
}

export interface PlanBody {
  label: string;
  operations: Operation[];
  overwrite?: boolean;
}

export interface Assessment {
  label: string;
  before: SystemRisk;
  after: SystemRisk;
  rescue_cost: number;
  relief: Record<string, number>;
  per_bank_delta: Record<string, { stress: number; loss: number; fragility: number }>;
}

export interface InterventionResponse {
  scenario_id: string;
  fn_i_summary: NetworkSummary;
  fn_is_summary: NetworkSummary;
  assessment: Assessment;
}

export interface CompareResponse {
  scenario_id: string;
  ranked: Assessment[];
  relief_table_csv: string;
}

export interface ApiErrorBody {
  error: { code: string; message: string; detail?: unknown };
}
