//! Text format for every model the crate works with.
//!
//! Each file is one JSON object carrying `format_version`, `kind` and an
//! optional free-text `note`, followed by the fields of its payload:
//!
//! | kind               | extension  | payload fields                          |
//! |--------------------|------------|-----------------------------------------|
//! | `behavioral_type`  | `.btype`   | aspect, alphabet, locations, initial, error_location?, edges |
//! | `component_system` | `.bsys`    | components `[{name, behavior}]`, priorities |
//! | `system_def`       | `.osys`    | init_bundle, bundles, repository        |
//! | `script`           | `.bscript` | steps                                   |
//! | `verdict`          |            | verdict                                 |
//! | `synthesis_result` |            | result                                  |
//!
//! An edge names its label by name alone when the alphabet has a single
//! label of that name, and as `{name, kind}` otherwise. Unknown keys are
//! rejected. [`save`] is canonical: fields in fixed order, alphabet and
//! edges sorted, two-space indentation, trailing newline.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{validate, BehavioralType, Edge, Label, LabelKind, Severity};
use crate::composition::{AnalysisVerdict, ComponentSystem, CompositionError, PriorityRule};
use crate::osgi::{BundleDef, Repository, Step, SystemDef};
use crate::synthesis::SynthesisResult;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelIoError {
    #[error("{line}:{column}: parse error: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{line}:{column}: schema error: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("{line}:{column}: unsupported format version {version}")]
    UnsupportedVersion { line: usize, column: usize, version: u64 },
    #[error("{line}:{column}: invalid model: {message}")]
    Invalid { line: usize, column: usize, message: String },
    #[error("expected a {expected} document, found {found}")]
    WrongKind { expected: PayloadKind, found: PayloadKind },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl ModelIoError {
    /// Line and column of a load error.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            ModelIoError::Parse { line, column, .. }
            | ModelIoError::Schema { line, column, .. }
            | ModelIoError::UnsupportedVersion { line, column, .. }
            | ModelIoError::Invalid { line, column, .. } => Some((*line, *column)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    BehavioralType,
    ComponentSystem,
    SystemDef,
    Script,
    Verdict,
    SynthesisResult,
}

impl PayloadKind {
    pub const ALL: [PayloadKind; 6] = [
        PayloadKind::BehavioralType,
        PayloadKind::ComponentSystem,
        PayloadKind::SystemDef,
        PayloadKind::Script,
        PayloadKind::Verdict,
        PayloadKind::SynthesisResult,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PayloadKind::BehavioralType => "behavioral_type",
            PayloadKind::ComponentSystem => "component_system",
            PayloadKind::SystemDef => "system_def",
            PayloadKind::Script => "script",
            PayloadKind::Verdict => "verdict",
            PayloadKind::SynthesisResult => "synthesis_result",
        }
    }
}

impl fmt::Display for PayloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    BehavioralType(BehavioralType),
    ComponentSystem(ComponentSystem),
    SystemDef(SystemDef),
    Script(Vec<Step>),
    Verdict(AnalysisVerdict),
    SynthesisResult(SynthesisResult),
}

impl Payload {
    pub fn kind(&self) -> PayloadKind {
        match self {
            Payload::BehavioralType(_) => PayloadKind::BehavioralType,
            Payload::ComponentSystem(_) => PayloadKind::ComponentSystem,
            Payload::SystemDef(_) => PayloadKind::SystemDef,
            Payload::Script(_) => PayloadKind::Script,
            Payload::Verdict(_) => PayloadKind::Verdict,
            Payload::SynthesisResult(_) => PayloadKind::SynthesisResult,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDocument {
    pub note: Option<String>,
    pub payload: Payload,
}

macro_rules! accessor {
    ($fn:ident, $variant:ident, $ty:ty) => {
        pub fn $fn(self) -> Result<$ty, ModelIoError> {
            match self.payload {
                Payload::$variant(x) => Ok(x),
                other => Err(ModelIoError::WrongKind {
                    expected: PayloadKind::$variant,
                    found: other.kind(),
                }),
            }
        }
    };
}

impl ModelDocument {
    pub fn new(payload: Payload) -> Self {
        ModelDocument { note: None, payload }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    accessor!(into_behavioral_type, BehavioralType, BehavioralType);
    accessor!(into_component_system, ComponentSystem, ComponentSystem);
    accessor!(into_system_def, SystemDef, SystemDef);
    accessor!(into_script, Script, Vec<Step>);
    accessor!(into_verdict, Verdict, AnalysisVerdict);
    accessor!(into_synthesis_result, SynthesisResult, SynthesisResult);
}

/// An edge's label: a bare name, or name and kind when the name alone is
/// ambiguous.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum LabelRef {
    Name(String),
    Full { name: String, kind: LabelKind },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    from: String,
    label: LabelRef,
    to: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BehaviorBody {
    aspect: String,
    alphabet: Vec<Label>,
    locations: Vec<String>,
    initial: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error_location: Option<String>,
    edges: Vec<EdgeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BehaviorDoc {
    format_version: u64,
    kind: PayloadKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    aspect: String,
    alphabet: Vec<Label>,
    locations: Vec<String>,
    initial: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error_location: Option<String>,
    edges: Vec<EdgeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDoc {
    name: String,
    behavior: BehaviorBody,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PriorityDoc {
    component: String,
    lower: LabelRef,
    higher: LabelRef,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    format_version: u64,
    kind: PayloadKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    components: Vec<ComponentDoc>,
    #[serde(default)]
    priorities: Vec<PriorityDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OsgiDoc {
    format_version: u64,
    kind: PayloadKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    init_bundle: String,
    bundles: Vec<BundleDef>,
    #[serde(default)]
    repository: Repository,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptDoc {
    format_version: u64,
    kind: PayloadKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    steps: Vec<Step>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerdictDoc {
    format_version: u64,
    kind: PayloadKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    verdict: AnalysisVerdict,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthesisDoc {
    format_version: u64,
    kind: PayloadKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    result: SynthesisResult,
}

#[derive(Deserialize)]
struct Probe {
    format_version: Option<serde_json::Value>,
    kind: Option<serde_json::Value>,
}

/// 1-based line and column of the first occurrence of `"needle"` in
/// `text`, or of the document start.
fn locate(text: &str, needle: &str) -> (usize, usize) {
    let quoted = serde_json::to_string(needle).unwrap_or_default();
    match text.find(&quoted) {
        Some(at) => {
            let before = &text[..at];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            (line, column)
        }
        None => (1, 1),
    }
}

fn invalid(text: &str, needle: &str, message: impl Into<String>) -> ModelIoError {
    let (line, column) = locate(text, needle);
    ModelIoError::Invalid {
        line,
        column,
        message: message.into(),
    }
}

fn json_error(e: serde_json::Error) -> ModelIoError {
    let (line, column, message) = (e.line(), e.column(), e.to_string());
    match e.classify() {
        serde_json::error::Category::Data => ModelIoError::Schema { line, column, message },
        _ => ModelIoError::Parse { line, column, message },
    }
}

fn resolve(alphabet: &BTreeSet<Label>, r: &LabelRef) -> Result<Label, (String, String)> {
    match r {
        LabelRef::Name(name) => {
            let found: Vec<&Label> = alphabet.iter().filter(|l| &l.name == name).collect();
            match found[..] {
                [l] => Ok(l.clone()),
                [] => Err((name.clone(), format!("label {name} is not in the alphabet"))),
                _ => Err((name.clone(), format!("label name {name} is ambiguous; give name and kind"))),
            }
        }
        LabelRef::Full { name, kind } => alphabet
            .iter()
            .find(|l| &l.name == name && l.kind == *kind)
            .cloned()
            .ok_or_else(|| (name.clone(), format!("label {name} ({kind}) is not in the alphabet"))),
    }
}

fn label_ref(alphabet: &BTreeSet<Label>, l: &Label) -> LabelRef {
    if alphabet.iter().filter(|x| x.name == l.name).count() == 1 {
        LabelRef::Name(l.name.clone())
    } else {
        LabelRef::Full {
            name: l.name.clone(),
            kind: l.kind,
        }
    }
}

fn behavior_from(body: BehaviorBody, text: &str) -> Result<BehavioralType, ModelIoError> {
    let mut alphabet = BTreeSet::new();
    for l in body.alphabet {
        let name = l.name.clone();
        if !alphabet.insert(l) {
            return Err(invalid(text, &name, format!("label {name} is declared twice")));
        }
    }
    let mut edges = BTreeSet::new();
    for e in body.edges {
        let label = resolve(&alphabet, &e.label).map_err(|(n, m)| invalid(text, &n, m))?;
        let edge = Edge::new(e.from, label, e.to);
        if edges.contains(&edge) {
            return Err(invalid(
                text,
                &edge.source,
                format!("edge {} -{}-> {} is listed twice", edge.source, edge.label.name, edge.destination),
            ));
        }
        edges.insert(edge);
    }
    let bt = BehavioralType {
        aspect: body.aspect,
        alphabet,
        locations: body.locations,
        initial: body.initial,
        edges,
        error_location: body.error_location,
    };
    if let Some(v) = validate(&bt).into_iter().find(|v| v.severity == Severity::Error) {
        return Err(invalid(text, &v.subject, v.message));
    }
    Ok(bt)
}

fn behavior_body(bt: &BehavioralType) -> BehaviorBody {
    BehaviorBody {
        aspect: bt.aspect.clone(),
        alphabet: bt.alphabet.iter().cloned().collect(),
        locations: bt.locations.clone(),
        initial: bt.initial.clone(),
        error_location: bt.error_location.clone(),
        edges: bt
            .edges
            .iter()
            .map(|e| EdgeDoc {
                from: e.source.clone(),
                label: label_ref(&bt.alphabet, &e.label),
                to: e.destination.clone(),
            })
            .collect(),
    }
}

fn system_from(doc: SystemDoc, text: &str) -> Result<ComponentSystem, ModelIoError> {
    let mut components = Vec::new();
    for c in doc.components {
        components.push((c.name, behavior_from(c.behavior, text)?));
    }
    let mut rules = Vec::new();
    for p in doc.priorities {
        let Some((_, bt)) = components.iter().find(|(n, _)| n == &p.component) else {
            return Err(invalid(text, &p.component, format!("priority names unknown component {}", p.component)));
        };
        let lower = resolve(&bt.alphabet, &p.lower).map_err(|(n, m)| invalid(text, &n, m))?;
        let higher = resolve(&bt.alphabet, &p.higher).map_err(|(n, m)| invalid(text, &n, m))?;
        rules.push(PriorityRule::new(p.component, lower, higher));
    }
    let composition_error = |e: CompositionError| {
        let needle = match &e {
            CompositionError::DuplicateComponent(n) | CompositionError::InvalidComponent { name: n, .. } => n.clone(),
            CompositionError::ReflexiveRule { label, .. } => label.clone(),
            _ => String::new(),
        };
        invalid(text, &needle, e.to_string())
    };
    ComponentSystem::new(components)
        .and_then(|s| s.apply_priorities(&rules))
        .map_err(composition_error)
}

fn check_version(text: &str) -> Result<PayloadKind, ModelIoError> {
    let probe: Probe = serde_json::from_str(text).map_err(json_error)?;
    let schema = |needle: &str, message: String| {
        let (line, column) = locate(text, needle);
        ModelIoError::Schema { line, column, message }
    };
    let version = probe
        .format_version
        .ok_or_else(|| schema("", "missing field `format_version`".into()))?;
    let version = version
        .as_u64()
        .ok_or_else(|| schema("format_version", "`format_version` must be a non-negative integer".into()))?;
    if version != FORMAT_VERSION {
        let (line, column) = locate(text, "format_version");
        return Err(ModelIoError::UnsupportedVersion { line, column, version });
    }
    let kind = probe.kind.ok_or_else(|| schema("", "missing field `kind`".into()))?;
    let name = kind.as_str().unwrap_or_default();
    PayloadKind::ALL
        .into_iter()
        .find(|k| k.as_str() == name)
        .ok_or_else(|| schema("kind", format!("unknown document kind {kind}")))
}

/// Parses a document and checks it: referential integrity everywhere,
/// plus full validation of behavioral types and system definitions.
pub fn load(text: &str) -> Result<ModelDocument, ModelIoError> {
    let kind = check_version(text)?;
    Ok(match kind {
        PayloadKind::BehavioralType => {
            let d: BehaviorDoc = serde_json::from_str(text).map_err(json_error)?;
            let body = BehaviorBody {
                aspect: d.aspect,
                alphabet: d.alphabet,
                locations: d.locations,
                initial: d.initial,
                error_location: d.error_location,
                edges: d.edges,
            };
            ModelDocument {
                note: d.note,
                payload: Payload::BehavioralType(behavior_from(body, text)?),
            }
        }
        PayloadKind::ComponentSystem => {
            let mut d: SystemDoc = serde_json::from_str(text).map_err(json_error)?;
            let note = d.note.take();
            ModelDocument {
                note,
                payload: Payload::ComponentSystem(system_from(d, text)?),
            }
        }
        PayloadKind::SystemDef => {
            let d: OsgiDoc = serde_json::from_str(text).map_err(json_error)?;
            let def = SystemDef {
                init_bundle: d.init_bundle,
                bundles: d.bundles,
                repository: d.repository,
            };
            def.validate().map_err(|e| invalid(text, "", e.to_string()))?;
            ModelDocument {
                note: d.note,
                payload: Payload::SystemDef(def),
            }
        }
        PayloadKind::Script => {
            let d: ScriptDoc = serde_json::from_str(text).map_err(json_error)?;
            ModelDocument {
                note: d.note,
                payload: Payload::Script(d.steps),
            }
        }
        PayloadKind::Verdict => {
            let d: VerdictDoc = serde_json::from_str(text).map_err(json_error)?;
            ModelDocument {
                note: d.note,
                payload: Payload::Verdict(d.verdict),
            }
        }
        PayloadKind::SynthesisResult => {
            let d: SynthesisDoc = serde_json::from_str(text).map_err(json_error)?;
            ModelDocument {
                note: d.note,
                payload: Payload::SynthesisResult(d.result),
            }
        }
    })
}

/// Canonical rendering of `doc`.
pub fn save(doc: &ModelDocument) -> String {
    let note = doc.note.clone();
    let format_version = FORMAT_VERSION;
    let kind = doc.payload.kind();
    let mut out = match &doc.payload {
        Payload::BehavioralType(bt) => {
            let b = behavior_body(bt);
            serde_json::to_string_pretty(&BehaviorDoc {
                format_version,
                kind,
                note,
                aspect: b.aspect,
                alphabet: b.alphabet,
                locations: b.locations,
                initial: b.initial,
                error_location: b.error_location,
                edges: b.edges,
            })
        }
        Payload::ComponentSystem(sys) => serde_json::to_string_pretty(&SystemDoc {
            format_version,
            kind,
            note,
            components: sys
                .components()
                .iter()
                .map(|c| ComponentDoc {
                    name: c.name.clone(),
                    behavior: behavior_body(&c.behavior),
                })
                .collect(),
            priorities: sys
                .priorities()
                .iter()
                .map(|r| {
                    let alphabet = &sys.component(&r.component).expect("rules name components").behavior.alphabet;
                    PriorityDoc {
                        component: r.component.clone(),
                        lower: label_ref(alphabet, &r.lower),
                        higher: label_ref(alphabet, &r.higher),
                    }
                })
                .collect(),
        }),
        Payload::SystemDef(def) => serde_json::to_string_pretty(&OsgiDoc {
            format_version,
            kind,
            note,
            init_bundle: def.init_bundle.clone(),
            bundles: def.bundles.clone(),
            repository: def.repository.clone(),
        }),
        Payload::Script(steps) => serde_json::to_string_pretty(&ScriptDoc {
            format_version,
            kind,
            note,
            steps: steps.clone(),
        }),
        Payload::Verdict(v) => serde_json::to_string_pretty(&VerdictDoc {
            format_version,
            kind,
            note,
            verdict: v.clone(),
        }),
        Payload::SynthesisResult(r) => serde_json::to_string_pretty(&SynthesisDoc {
            format_version,
            kind,
            note,
            result: r.clone(),
        }),
    }
    .expect("model documents always serialize");
    out.push('\n');
    out
}

pub fn load_file(path: impl AsRef<Path>) -> Result<ModelDocument, ModelIoError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ModelIoError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    load(&text)
}

pub fn save_file(path: impl AsRef<Path>, doc: &ModelDocument) -> Result<(), ModelIoError> {
    let path = path.as_ref();
    std::fs::write(path, save(doc)).map_err(|e| ModelIoError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
