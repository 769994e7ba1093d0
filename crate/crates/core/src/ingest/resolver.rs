//! URL unshortening through an injected resolver.
//!
//! The resolver answers one hop at a time; [`UrlExpander`] follows the chain,
//! detects loops, enforces the hop limit, and caches results. Resolution
//! failures are never fatal: the URL comes back flagged unresolved.

use std::collections::{HashMap, HashSet};

/// One redirect hop. `Ok(None)` means the URL is terminal.
pub trait Resolve {
    fn resolve(&self, url: &str) -> std::result::Result<Option<String>, String>;
}

/// In-memory redirect table for tests and offline runs.
#[derive(Debug, Clone, Default)]
pub struct StubResolver {
    redirects: HashMap<String, String>,
}

impl StubResolver {
    pub fn new(redirects: impl IntoIterator<Item = (String, String)>) -> Self {
        StubResolver {
            redirects: redirects.into_iter().collect(),
        }
    }
}

impl Resolve for StubResolver {
    fn resolve(&self, url: &str) -> std::result::Result<Option<String>, String> {
        Ok(self.redirects.get(url).cloned())
    }
}

/// Resolver that treats every URL as terminal. Used when expansion is
/// disabled but the pipeline still wants uniform plumbing.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityResolver;

impl Resolve for IdentityResolver {
    fn resolve(&self, _url: &str) -> std::result::Result<Option<String>, String> {
        Ok(None)
    }
}

/// HTTP HEAD-based resolver following `Location` headers one hop at a time.
pub struct HttpResolver {
    client: reqwest::blocking::Client,
}

impl HttpResolver {
    pub fn new(timeout_secs: u64) -> std::result::Result<Self, String> {
        let client = reqwest::blocking::Client::builder()
            .redirect(reqwest::redirect::Policy::none())
            .timeout(std::time::Duration::from_secs(timeout_secs))
            .build()
            .map_err(|e| e.to_string())?;
        Ok(HttpResolver { client })
    }
}

impl Resolve for HttpResolver {
    fn resolve(&self, url: &str) -> std::result::Result<Option<String>, String> {
        let response = self.client.head(url).send().map_err(|e| e.to_string())?;
        if !response.status().is_redirection() {
            return Ok(None);
        }
        let location = response
            .headers()
            .get(reqwest::header::LOCATION)
            .and_then(|v| v.to_str().ok())
            .ok_or_else(|| "redirect without Location header".to_string())?;
        // Relative redirects are resolved against the current URL.
        match reqwest::Url::parse(url).and_then(|base| base.join(location)) {
            Ok(joined) => Ok(Some(joined.to_string())),
            Err(e) => Err(e.to_string()),
        }
    }
}

/// Expansion outcome: the final URL and whether the chain terminated cleanly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expanded {
    pub url: String,
    pub resolved: bool,
}

/// Follows redirect chains with a hop limit, loop detection, and a cache.
pub struct UrlExpander {
    resolver: Box<dyn Resolve>,
    max_hops: usize,
    cache: HashMap<String, Expanded>,
}

impl UrlExpander {
    pub fn new(resolver: Box<dyn Resolve>, max_hops: usize) -> Self {
        UrlExpander {
            resolver,
            max_hops,
            cache: HashMap::new(),
        }
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }

    /// Expand one URL. Loop or hop-limit exhaustion returns the last-seen URL
    /// flagged unresolved; resolver failure returns the input flagged
    /// unresolved.
    pub fn expand(&mut self, url: &str) -> Expanded {
        if let Some(hit) = self.cache.get(url) {
            return hit.clone();
        }
        let result = self.walk_chain(url);
        self.cache.insert(url.to_string(), result.clone());
        result
    }

    fn walk_chain(&self, url: &str) -> Expanded {
        let mut seen: HashSet<String> = HashSet::new();
        let mut current = url.to_string();
        seen.insert(current.clone());
        for _ in 0..self.max_hops {
            match self.resolver.resolve(&current) {
                Ok(None) => {
                    return Expanded {
                        url: current,
                        resolved: true,
                    }
                }
                Ok(Some(next)) => {
                    if !seen.insert(next.clone()) {
                        // Redirect loop.
                        return Expanded {
                            url: next,
                            resolved: false,
                        };
                    }
                    current = next;
                }
                Err(_) => {
                    return Expanded {
                        url: url.to_string(),
                        resolved: false,
                    }
                }
            }
        }
        // Hop limit reached before a terminal answer.
        Expanded {
            url: current,
            resolved: false,
        }
    }
}
