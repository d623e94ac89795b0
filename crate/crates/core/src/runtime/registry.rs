use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::logic::Term;

use super::Message;

pub type Props = BTreeMap<String, Term>;

/// Service handler: consumes payload and message properties and returns
/// the new payload and properties, or an error message.
pub type Handler = Arc<dyn Fn(&[u8], &Props) -> Result<(Vec<u8>, Props), String> + Send + Sync>;

/// Host action behind an obligation. Returns whether the action succeeded.
pub type Action = Arc<dyn Fn(&Term, &Message) -> bool + Send + Sync>;

#[derive(Clone, Default)]
pub struct ServiceRegistry {
    handlers: HashMap<String, Handler>,
}

impl fmt::Debug for ServiceRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: Vec<_> = self.handlers.keys().collect();
        names.sort();
        f.debug_struct("ServiceRegistry").field("handlers", &names).finish()
    }
}

impl ServiceRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a handler that tolerates concurrent calls.
    pub fn register<F>(&mut self, service: &str, f: F)
    where
        F: Fn(&[u8], &Props) -> Result<(Vec<u8>, Props), String> + Send + Sync + 'static,
    {
        self.handlers.insert(service.to_string(), Arc::new(f));
    }

    /// Registers a handler whose calls are serialized by a lock.
    pub fn register_serialized<F>(&mut self, service: &str, f: F)
    where
        F: FnMut(&[u8], &Props) -> Result<(Vec<u8>, Props), String> + Send + 'static,
    {
        let f = Mutex::new(f);
        self.register(service, move |p, props| {
            let mut guard = f.lock().unwrap_or_else(|e| e.into_inner());
            (*guard)(p, props)
        });
    }

    /// Pass-through handler.
    pub fn register_identity(&mut self, service: &str) {
        self.register(service, |p, props| Ok((p.to_vec(), props.clone())));
    }

    pub fn get(&self, service: &str) -> Option<&Handler> {
        self.handlers.get(service)
    }

    pub fn contains(&self, service: &str) -> bool {
        self.handlers.contains_key(service)
    }
}

#[derive(Clone, Default)]
pub struct ObligationRegistry {
    actions: HashMap<(String, usize), Action>,
}

impl fmt::Debug for ObligationRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: Vec<_> = self
            .actions
            .keys()
            .map(|(n, a)| format!("{n}/{a}"))
            .collect();
        names.sort();
        f.debug_struct("ObligationRegistry")
            .field("actions", &names)
            .finish()
    }
}

impl ObligationRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register<F>(&mut self, name: &str, arity: usize, f: F)
    where
        F: Fn(&Term, &Message) -> bool + Send + Sync + 'static,
    {
        self.actions.insert((name.to_string(), arity), Arc::new(f));
    }

    /// Runs `action`. An unregistered action counts as failed.
    pub fn run(&self, action: &Term, msg: &Message) -> bool {
        let Some((name, arity)) = action.indicator() else {
            return false;
        };
        self.actions
            .get(&(name.to_string(), arity))
            .is_some_and(|f| f(action, msg))
    }
}
