//! Client-side demo. Every export takes and returns JSON (or CSV/SVG) text
//! so the page can keep its state as plain strings.

use gos_core::analysis::{palette_layout, popularity_matrix, render_palette_svg, PaletteOptions};
use gos_core::annotation::AnnotationSet;
use gos_core::inference::{
    infer, name_groups, read_partition_csv, write_partition_csv, InferenceConfig,
};
use gos_core::metrics::nmi;
use gos_core::simulator::{posting_rate, simulate, PlantedModel};
use gos_core::OpinionGraph;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Simulates a survey from a planted model (JSON, missing fields take their
/// defaults). Returns `{graph, planted, stats}` where `graph` is the graph
/// document as a string and `planted` lists the true group of each vertex.
#[wasm_bindgen(js_name = simulateSurvey)]
pub fn simulate_survey(model_json: &str) -> Result<String, String> {
    let model: PlantedModel = serde_json::from_str(model_json).map_err(err)?;
    let sim = simulate(&model).map_err(err)?;
    Ok(json!({
        "graph": sim.graph.to_json(),
        "planted": sim.planted.vertex_labels(),
        "stats": {
            "opinions": sim.graph.num_opinions(),
            "respondents": sim.graph.num_respondents(),
            "edges": sim.graph.num_edges(),
            "posting_rate": posting_rate(&sim.graph),
        },
        "warnings": sim.report.warnings,
    })
    .to_string())
}

/// Clusters a graph. `planted_json` may be empty; when it holds a label
/// array the NMI against it is included. Returns `{partition_csv,
/// num_groups, score, nmi, popularity}`.
#[wasm_bindgen(js_name = clusterSurvey)]
pub fn cluster_survey(
    graph_json: &str,
    seed: u32,
    sweeps: u32,
    restarts: u32,
    beta: f64,
    planted_json: &str,
) -> Result<String, String> {
    let graph = OpinionGraph::from_json(graph_json).map_err(err)?;
    let config = InferenceConfig {
        sweeps: sweeps as usize,
        restarts: restarts as usize,
        rng_seed: seed as u64,
        beta,
        ..InferenceConfig::default()
    };
    let result = infer(&graph.bipartite(), None, &config).map_err(err)?;
    let names = name_groups(&graph, &result.partition, &AnnotationSet::new());
    let mut csv = Vec::new();
    write_partition_csv(&graph, &result.partition, &names, &mut csv).map_err(err)?;
    let score = if planted_json.trim().is_empty() {
        None
    } else {
        let planted: Vec<usize> = serde_json::from_str(planted_json).map_err(err)?;
        if planted.len() != graph.num_vertices() {
            return Err(format!(
                "{} planted labels for {} vertices",
                planted.len(),
                graph.num_vertices()
            ));
        }
        Some(nmi(result.partition.labels(), &planted))
    };
    let popularity = popularity_matrix(&graph, &result.partition, &names, None).map_err(err)?;
    Ok(json!({
        "partition_csv": String::from_utf8(csv).map_err(err)?,
        "num_groups": result.partition.num_groups(),
        "score": result.score,
        "nmi": score,
        "popularity": popularity,
    })
    .to_string())
}

/// Draws the palette for a clustered graph. `exclude` is a comma-separated
/// list of opinion group indices to leave out.
#[wasm_bindgen(js_name = paletteSvg)]
pub fn palette_svg(
    graph_json: &str,
    partition_csv: &str,
    exclude: &str,
    width: f64,
    height: f64,
) -> Result<String, String> {
    let graph = OpinionGraph::from_json(graph_json).map_err(err)?;
    let pf = read_partition_csv(&graph, partition_csv.as_bytes()).map_err(err)?;
    let exclude_groups = exclude
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| format!("bad group index `{s}`")))
        .collect::<Result<Vec<_>, _>>()?;
    let layout = palette_layout(&graph, &pf.partition, &pf.names, &PaletteOptions { exclude_groups })
        .map_err(err)?;
    Ok(render_palette_svg(&layout, width, height))
}
