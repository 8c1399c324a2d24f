//! Component types, instances and connections, with their JSON form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::SystemError;
use crate::fmr::{Mode, ShortList};
use crate::quant::{FailureDatabase, FailureModel};

/// An out-port deviation such as `Out1.DU`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortDeviation {
    pub port: String,
    pub class: String,
}

impl PortDeviation {
    pub fn parse(text: &str) -> Result<Self, SystemError> {
        match text.split_once('.') {
            Some((port, class)) if !port.is_empty() && !class.is_empty() && !class.contains('.') => {
                Ok(PortDeviation {
                    port: port.to_string(),
                    class: class.to_string(),
                })
            }
            _ => Err(SystemError::Syntax(format!(
                "`{text}` is not a port deviation of the form Port.CLASS"
            ))),
        }
    }
}

impl fmt::Display for PortDeviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.port, self.class)
    }
}

/// An instance's out-port deviation, written `Instance.Port.CLASS`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TopEvent {
    pub instance: String,
    pub deviation: PortDeviation,
}

impl TopEvent {
    pub fn parse(text: &str) -> Result<Self, SystemError> {
        let (instance, rest) = text.split_once('.').ok_or_else(|| {
            SystemError::Syntax(format!("`{text}` is not of the form Instance.Port.CLASS"))
        })?;
        Ok(TopEvent {
            instance: instance.to_string(),
            deviation: PortDeviation::parse(rest)?,
        })
    }
}

impl fmt::Display for TopEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.instance, self.deviation)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentType {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub events: BTreeMap<String, FailureModel>,
    pub logic: BTreeMap<PortDeviation, Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: String,
    pub type_name: String,
    /// Reporting group, e.g. `sensors`, `logic_solver`, `final_elements`.
    pub subsystem: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortRef {
    pub instance: String,
    pub port: String,
}

impl PortRef {
    fn parse(text: &str) -> Result<Self, SystemError> {
        match text.split_once('.') {
            Some((i, p)) if !i.is_empty() && !p.is_empty() => Ok(PortRef {
                instance: i.to_string(),
                port: p.to_string(),
            }),
            _ => Err(SystemError::Syntax(format!(
                "`{text}` is not a port reference of the form Instance.Port"
            ))),
        }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.instance, self.port)
    }
}

/// A component failure model. Immutable once built; use
/// [`SystemModel::attach_shortlist`] to derive a model with an import bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub name: String,
    pub types: BTreeMap<String, ComponentType>,
    pub instances: BTreeMap<String, Instance>,
    /// In-port to the out-port driving it.
    pub connections: BTreeMap<PortRef, PortRef>,
    /// Out-port deviations whose logic is an imported short list.
    pub bindings: BTreeMap<(String, PortDeviation), ShortList>,
    pub tops: Vec<TopEvent>,
}

// ---- document form ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemDoc {
    #[serde(default)]
    pub name: String,
    pub types: Vec<TypeDoc>,
    pub instances: Vec<InstanceDoc>,
    #[serde(default)]
    pub connections: Vec<ConnectionDoc>,
    #[serde(default)]
    pub imports: Vec<ImportDoc>,
    #[serde(default)]
    pub tops: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypeDoc {
    pub name: String,
    #[serde(default)]
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default)]
    pub events: Vec<EventDoc>,
    #[serde(default)]
    pub logic: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventDoc {
    pub id: String,
    #[serde(flatten)]
    pub model: FailureModel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub id: String,
    #[serde(rename = "type")]
    pub type_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsystem: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectionDoc {
    pub from: String,
    pub to: String,
}

/// Where an imported short list comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ImportSource {
    /// A saved short-list JSON file.
    ShortList { shortlist: String },
    /// A program analyzed at load time.
    Program {
        program: String,
        target: String,
        mode: Mode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        profile: Option<String>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportDoc {
    pub instance: String,
    /// Out-port deviation, e.g. `Out1.DU`.
    pub port: String,
    #[serde(flatten)]
    pub source: ImportSource,
}

impl SystemModel {
    /// Builds and validates a model. Imports are resolved by `resolve`.
    pub fn from_doc(
        doc: &SystemDoc,
        resolve: &mut dyn FnMut(&ImportSource) -> Result<ShortList, String>,
    ) -> Result<Self, SystemError> {
        let mut types = BTreeMap::new();
        for t in &doc.types {
            let mut events = BTreeMap::new();
            for e in &t.events {
                e.model.validate().map_err(|message| {
                    SystemError::Invalid(format!("type {}: event {}: {message}", t.name, e.id))
                })?;
                if events.insert(e.id.clone(), e.model).is_some() {
                    return Err(SystemError::Invalid(format!(
                        "type {}: duplicate event `{}`",
                        t.name, e.id
                    )));
                }
            }
            let mut logic = BTreeMap::new();
            for (key, text) in &t.logic {
                let dev = PortDeviation::parse(key)?;
                let expr = Expr::parse(text).map_err(|e| {
                    SystemError::Invalid(format!("type {}: {key}: {e}", t.name))
                })?;
                logic.insert(dev, expr);
            }
            let ty = ComponentType {
                name: t.name.clone(),
                inputs: t.inputs.clone(),
                outputs: t.outputs.clone(),
                events,
                logic,
            };
            if types.insert(t.name.clone(), ty).is_some() {
                return Err(SystemError::Invalid(format!("duplicate type `{}`", t.name)));
            }
        }

        let mut instances = BTreeMap::new();
        for i in &doc.instances {
            let inst = Instance {
                id: i.id.clone(),
                type_name: i.type_name.clone(),
                subsystem: i.subsystem.clone(),
            };
            if instances.insert(i.id.clone(), inst).is_some() {
                return Err(SystemError::Invalid(format!("duplicate instance `{}`", i.id)));
            }
        }

        let mut connections = BTreeMap::new();
        for c in &doc.connections {
            let from = PortRef::parse(&c.from)?;
            let to = PortRef::parse(&c.to)?;
            if connections.insert(to.clone(), from).is_some() {
                return Err(SystemError::Invalid(format!("in-port {to} is connected twice")));
            }
        }

        let tops = doc
            .tops
            .iter()
            .map(|t| TopEvent::parse(t))
            .collect::<Result<Vec<_>, _>>()?;

        let mut model = SystemModel {
            name: doc.name.clone(),
            types,
            instances,
            connections,
            bindings: BTreeMap::new(),
            tops,
        };
        model.validate()?;
        for imp in &doc.imports {
            let dev = PortDeviation::parse(&imp.port)?;
            let sl = resolve(&imp.source).map_err(|message| SystemError::Import {
                binding: format!("{}.{}", imp.instance, imp.port),
                message,
            })?;
            model = model.attach_shortlist(&imp.instance, &dev, sl)?;
        }
        Ok(model)
    }

    pub fn from_json(
        text: &str,
        resolve: &mut dyn FnMut(&ImportSource) -> Result<ShortList, String>,
    ) -> Result<Self, SystemError> {
        let doc: SystemDoc =
            serde_json::from_str(text).map_err(|e| SystemError::Syntax(e.to_string()))?;
        Self::from_doc(&doc, resolve)
    }

    pub fn type_of(&self, instance: &str) -> Result<&ComponentType, SystemError> {
        let inst = self
            .instances
            .get(instance)
            .ok_or_else(|| SystemError::UnknownInstance(instance.to_string()))?;
        self.types
            .get(&inst.type_name)
            .ok_or_else(|| SystemError::Invalid(format!("instance {instance}: unknown type `{}`", inst.type_name)))
    }

    /// Checks types, ports, event references and acyclicity.
    pub fn validate(&self) -> Result<(), SystemError> {
        for t in self.types.values() {
            for (dev, expr) in &t.logic {
                if !t.outputs.contains(&dev.port) {
                    return Err(SystemError::Invalid(format!(
                        "type {}: logic for undeclared out-port `{}`",
                        t.name, dev.port
                    )));
                }
                for leaf in expr.leaves() {
                    match leaf {
                        Expr::Event(e) if !t.events.contains_key(e) => {
                            return Err(SystemError::Invalid(format!(
                                "type {}: {dev} references unknown event `{e}`",
                                t.name
                            )))
                        }
                        Expr::Port { port, .. } if !t.inputs.contains(port) => {
                            return Err(SystemError::Invalid(format!(
                                "type {}: {dev} references undeclared in-port `{port}`",
                                t.name
                            )))
                        }
                        _ => {}
                    }
                }
            }
        }
        for id in self.instances.keys() {
            self.type_of(id)?;
        }
        for (to, from) in &self.connections {
            if !self.type_of(&to.instance)?.inputs.contains(&to.port) {
                return Err(SystemError::Invalid(format!("connection target {to} is not an in-port")));
            }
            if !self.type_of(&from.instance)?.outputs.contains(&from.port) {
                return Err(SystemError::Invalid(format!("connection source {from} is not an out-port")));
            }
        }
        for top in &self.tops {
            self.check_out_port(&top.instance, &top.deviation)?;
        }
        self.check_acyclic()
    }

    fn check_out_port(&self, instance: &str, dev: &PortDeviation) -> Result<(), SystemError> {
        if self.type_of(instance)?.outputs.contains(&dev.port) {
            Ok(())
        } else {
            Err(SystemError::UnknownPort(format!("{instance}.{}", dev.port)))
        }
    }

    fn check_acyclic(&self) -> Result<(), SystemError> {
        // Kahn's algorithm over instance-level edges.
        let mut indegree: BTreeMap<&str, usize> =
            self.instances.keys().map(|k| (k.as_str(), 0)).collect();
        let mut edges: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (to, from) in &self.connections {
            edges.entry(from.instance.as_str()).or_default().push(to.instance.as_str());
            *indegree.get_mut(to.instance.as_str()).expect("validated instance") += 1;
        }
        let mut ready: Vec<&str> = indegree.iter().filter(|(_, &d)| d == 0).map(|(k, _)| *k).collect();
        let mut seen = 0;
        while let Some(n) = ready.pop() {
            seen += 1;
            for m in edges.get(n).into_iter().flatten() {
                let d = indegree.get_mut(m).expect("validated instance");
                *d -= 1;
                if *d == 0 {
                    ready.push(m);
                }
            }
        }
        if seen == indegree.len() {
            Ok(())
        } else {
            let stuck: BTreeSet<&str> = indegree.iter().filter(|(_, &d)| d > 0).map(|(k, _)| *k).collect();
            Err(SystemError::Cycle(stuck.into_iter().collect::<Vec<_>>().join(", ")))
        }
    }

    /// A copy of the model whose `instance`/`deviation` logic is the
    /// OR-of-ANDs of `sl`, with each literal a basic event.
    pub fn attach_shortlist(
        &self,
        instance: &str,
        deviation: &PortDeviation,
        sl: ShortList,
    ) -> Result<SystemModel, SystemError> {
        self.check_out_port(instance, deviation)?;
        let key = (instance.to_string(), deviation.clone());
        if self.bindings.contains_key(&key) {
            return Err(SystemError::DuplicateBinding(format!("{instance}.{deviation}")));
        }
        let mut out = self.clone();
        out.bindings.insert(key, sl);
        Ok(out)
    }

    /// Failure data for every component event, keyed `Instance.Event`.
    pub fn event_database(&self) -> FailureDatabase {
        let mut db = FailureDatabase::default();
        for inst in self.instances.values() {
            if let Some(t) = self.types.get(&inst.type_name) {
                for (e, m) in &t.events {
                    db.insert(event_id(&inst.id, e), *m);
                }
            }
        }
        db
    }

    /// Subsystem of each basic event; imported literals take the subsystem
    /// of the importing instance.
    pub fn event_subsystems(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for inst in self.instances.values() {
            let Some(sub) = &inst.subsystem else { continue };
            if let Some(t) = self.types.get(&inst.type_name) {
                for e in t.events.keys() {
                    out.insert(event_id(&inst.id, e), sub.clone());
                }
            }
        }
        for ((inst, _), sl) in &self.bindings {
            if let Some(sub) = self.instances.get(inst).and_then(|i| i.subsystem.clone()) {
                for id in sl.event_sets().into_iter().flatten() {
                    out.insert(id, sub.clone());
                }
            }
        }
        out
    }
}

/// Basic-event id of a component event: instance path plus local name.
pub fn event_id(instance: &str, event: &str) -> String {
    format!("{instance}.{event}")
}
