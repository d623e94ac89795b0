//! How route services map onto policy services. Shared by the runtime and
//! the verifier so both see the same targets and label transformations.

use std::collections::BTreeMap;

use crate::compiler::CompiledPolicy;
use crate::labels::LabelTransform;
use crate::route::{Route, Statement, StmtNo};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceBinding {
    pub service: String,
    /// String handed to the PDP: the endpoint URL for `from`/`to` when the
    /// route declares one, otherwise the service id. Beans always use the id.
    pub target: String,
    /// Union of ℒ± over matching policy services.
    pub transform: LabelTransform,
    /// False when no policy service matched; `transform` is then empty.
    pub declared: bool,
}

/// Binding of the service touched by statement `stmt`.
pub fn bind(route: &Route, policy: &CompiledPolicy, stmt: &Statement) -> Option<ServiceBinding> {
    let (service, target) = match stmt {
        Statement::From(s) | Statement::To(s) => (s, route.target_of(s).to_string()),
        Statement::Bean(s) => (s, s.clone()),
        _ => return None,
    };
    let found = match stmt {
        Statement::Bean(_) => policy.service(service).map(|s| s.transform()),
        _ => policy.transform_for(&target),
    };
    Some(ServiceBinding {
        service: service.clone(),
        target,
        declared: found.is_some(),
        transform: found.unwrap_or_default(),
    })
}

/// Bindings for every service-touching statement, plus one warning per
/// service without a declared label transformation.
pub fn bind_route(
    route: &Route,
    policy: &CompiledPolicy,
) -> (BTreeMap<StmtNo, ServiceBinding>, Vec<String>) {
    let mut out = BTreeMap::new();
    let mut warnings = Vec::new();
    for (&n, stmt) in route.statements() {
        if let Some(b) = bind(route, policy, stmt) {
            if !b.declared {
                let w = format!(
                    "service {} ({}) has no declared label transformation; assuming none",
                    b.service, b.target
                );
                if !warnings.contains(&w) {
                    warnings.push(w);
                }
            }
            out.insert(n, b);
        }
    }
    (out, warnings)
}
