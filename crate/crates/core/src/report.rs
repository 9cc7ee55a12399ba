//! Machine-readable verdicts.
//!
//! Operations are referenced by `(client, inv_index)` into the checked trace,
//! so a report plus its trace is enough to replay a witness through the
//! independent condition checkers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize};

use crate::check::{
    validate_fsc_views, validate_sc_witness, BudgetUsed, ExtensionChoice, FscVerdict, Outcome,
    ScVerdict, WaitFreedom,
};
use crate::history::{ClientId, Event, History, OpId, Operation, Value, View};
use crate::register::RegisterSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    /// Sequential consistency.
    Sc,
    /// Fork sequential consistency.
    Fsc,
    /// Wait-freedom.
    Wf,
}

impl std::fmt::Display for Property {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Property::Sc => "sc",
            Property::Fsc => "fsc",
            Property::Wf => "wf",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpRef {
    pub client: ClientId,
    pub inv_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl OpRef {
    fn of(o: &Operation) -> Self {
        OpRef {
            client: o.client,
            inv_index: o.inv_index,
            label: o.label.clone(),
        }
    }

    fn id(&self) -> OpId {
        OpId {
            client: self.client,
            inv_index: self.inv_index,
        }
    }

    fn name(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| format!("op@{}#{}", self.client, self.inv_index))
    }
}

/// A pending operation completed by the extension. Reads carry their
/// chosen return (`null` for ⊥); writes carry no `returns` key.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub client: ClientId,
    pub inv_index: usize,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "present"
    )]
    pub returns: Option<Option<String>>,
}

fn present<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Option<String>>, D::Error> {
    Option::<String>::deserialize(d).map(Some)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub property: Property,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extension: Vec<Completion>,
    /// The sequential permutation, on an sc pass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<OpRef>>,
    /// One view per client, on an fsc pass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub views: Option<BTreeMap<ClientId, Vec<OpRef>>>,
    /// The pending operation of a correct client, on a wf failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending: Option<OpRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_used: Option<BudgetUsed>,
}

fn completions(ext: Option<&crate::check::Extension>) -> Vec<Completion> {
    ext.map(|e| {
        e.completed
            .iter()
            .map(|(id, choice)| Completion {
                client: id.client,
                inv_index: id.inv_index,
                returns: match choice {
                    ExtensionChoice::WriteOk => None,
                    ExtensionChoice::ReadReturns(Value::Bottom) => Some(None),
                    ExtensionChoice::ReadReturns(Value::Data(s)) => Some(Some(s.clone())),
                },
            })
            .collect()
    })
    .unwrap_or_default()
}

fn refs(v: &View) -> Vec<OpRef> {
    v.ops.iter().map(OpRef::of).collect()
}

impl Report {
    pub fn from_sc(v: &ScVerdict) -> Self {
        Report {
            property: Property::Sc,
            outcome: v.outcome,
            extension: completions(v.extension.as_ref()),
            witness: v.witness.as_ref().map(refs),
            views: None,
            pending: None,
            counterexample: v.reason.clone(),
            budget_used: Some(v.used),
        }
    }

    pub fn from_fsc(v: &FscVerdict) -> Self {
        Report {
            property: Property::Fsc,
            outcome: v.outcome,
            extension: completions(v.extension.as_ref()),
            witness: None,
            views: v
                .views
                .as_ref()
                .map(|m| m.iter().map(|(c, view)| (*c, refs(view))).collect()),
            pending: None,
            counterexample: v.reason.clone(),
            budget_used: Some(v.used),
        }
    }

    pub fn from_wf(w: &WaitFreedom, correct: &BTreeSet<ClientId>) -> Self {
        let names: Vec<String> = correct.iter().map(|c| c.to_string()).collect();
        match w {
            WaitFreedom::Pass => Report {
                property: Property::Wf,
                outcome: Outcome::Pass,
                extension: Vec::new(),
                witness: None,
                views: None,
                pending: None,
                counterexample: None,
                budget_used: None,
            },
            WaitFreedom::Fail(o) => Report {
                property: Property::Wf,
                outcome: Outcome::Fail,
                extension: Vec::new(),
                witness: None,
                views: None,
                pending: Some(OpRef::of(o)),
                counterexample: Some(format!(
                    "{o} never completes, but {} is among the correct clients {{{}}}",
                    o.client,
                    names.join(", ")
                )),
                budget_used: None,
            },
        }
    }

    /// The extended history the report's witness refers to.
    pub fn extended_history(&self, h: &History) -> Result<History, String> {
        let mut appended = Vec::new();
        for c in &self.extension {
            let id = OpId {
                client: c.client,
                inv_index: c.inv_index,
            };
            let o = h
                .op(id)
                .filter(|o| !o.is_complete())
                .ok_or_else(|| format!("no pending operation at {}#{}", c.client, c.inv_index))?;
            let mut e = match (o.is_write(), &c.returns) {
                (true, None) => Event::write_ok(o.client, &o.register),
                (false, Some(v)) => Event::read_returns(
                    o.client,
                    &o.register,
                    v.clone().map_or(Value::Bottom, Value::Data),
                ),
                _ => return Err(format!("completion of {} does not fit its kind", o.name())),
            };
            e.label = o.label.clone();
            appended.push(e);
        }
        h.extended(&appended).map_err(|e| e.to_string())
    }

    fn resolve(refs: &[OpRef], extended: &History, owner: Option<ClientId>) -> Result<View, String> {
        let ops = refs
            .iter()
            .map(|r| {
                extended
                    .op(r.id())
                    .cloned()
                    .ok_or_else(|| format!("{} is not an operation of the trace", r.name()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        View::new(owner, ops).map_err(|e| e.to_string())
    }

    /// Replays a pass witness through the independent condition checkers.
    /// Reports without a witness validate trivially.
    pub fn revalidate(&self, h: &History, spec: &RegisterSpec) -> Result<(), String> {
        if self.outcome != Outcome::Pass {
            return Ok(());
        }
        let extended = self.extended_history(h)?;
        match self.property {
            Property::Sc => {
                let w = self.witness.as_ref().ok_or("sc pass without a witness")?;
                let pi = Self::resolve(w, &extended, None)?;
                validate_sc_witness(h, &extended, &pi, spec)
            }
            Property::Fsc => {
                let vs = self.views.as_ref().ok_or("fsc pass without views")?;
                let mut views = BTreeMap::new();
                for (c, r) in vs {
                    views.insert(*c, Self::resolve(r, &extended, Some(*c))?);
                }
                validate_fsc_views(h, &extended, &views, spec)
                    .map_err(|(c, cond, m)| format!("view of {c} breaks {cond}: {m}"))
            }
            Property::Wf => Ok(()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Human-readable form.
    pub fn pretty(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}: {}", self.property, self.outcome);
        for c in &self.extension {
            let what = match &c.returns {
                None => "ok".to_string(),
                Some(None) => "⊥".to_string(),
                Some(Some(v)) => v.clone(),
            };
            let _ = writeln!(
                s,
                "  completes pending op@{}#{} with {what}",
                c.client, c.inv_index
            );
        }
        let list = |r: &[OpRef]| r.iter().map(OpRef::name).collect::<Vec<_>>().join(", ");
        if let Some(w) = &self.witness {
            let _ = writeln!(s, "  witness: [{}]", list(w));
        }
        if let Some(vs) = &self.views {
            for (c, r) in vs {
                let _ = writeln!(s, "  view of {c}: [{}]", list(r));
            }
        }
        if let Some(c) = &self.counterexample {
            let _ = writeln!(s, "  {c}");
        }
        if let Some(b) = &self.budget_used {
            let _ = writeln!(s, "  searched {} extensions, {} nodes", b.extensions, b.nodes);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::{check_sequential_consistency, SearchBudget};
    use crate::history::RegisterId;

    #[test]
    fn sc_report_revalidates_with_extension() {
        let x1 = RegisterId::new("X1");
        let h = History::new(vec![
            Event::invoke_write(ClientId(1), &x1, Value::data("u")),
            Event::invoke_read(ClientId(2), &x1),
            Event::read_returns(ClientId(2), &x1, Value::data("u")),
            Event::invoke_read(ClientId(2), &x1),
        ])
        .unwrap();
        let spec = RegisterSpec::standard(2);
        let v = check_sequential_consistency(&h, &spec, &SearchBudget::default()).unwrap();
        let r = Report::from_sc(&v);
        assert_eq!(r.outcome, Outcome::Pass);
        assert_eq!(r.extension.len(), 1);
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        back.revalidate(&h, &spec).unwrap();

        let mut forged = back.clone();
        forged.witness.as_mut().unwrap().reverse();
        assert!(forged.revalidate(&h, &spec).is_err());
    }
}
