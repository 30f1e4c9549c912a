// SPDX-License-Identifier: Apache-2.0

//! JSON document format.

use serde::{Deserialize, Serialize};

use super::{ApplicationGraph, ArchitectureGraph, MappingEdge, ProblemSpec, SpecError};

#[derive(Serialize, Deserialize)]
struct Document {
    application: ApplicationGraph,
    architecture: ArchitectureGraph,
    mapping_edges: Vec<MappingEdge>,
}

/// Parses and validates a problem specification document.
pub fn parse_spec(text: &str) -> Result<ProblemSpec, SpecError> {
    let doc: Document = serde_json::from_str(text)?;
    ProblemSpec::new(doc.application, doc.architecture, doc.mapping_edges)
}

/// Writes a specification as a pretty-printed JSON document.
pub fn emit_spec(spec: &ProblemSpec) -> String {
    let doc = Document {
        application: spec.app.clone(),
        architecture: spec.arch.clone(),
        mapping_edges: spec.mapping_edges.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("specification serializes")
}
