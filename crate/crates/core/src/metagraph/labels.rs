//! URL-to-cascade label transfer.

use serde::{Deserialize, Serialize};

use crate::cascade::Cascade;
use crate::ingest::labels::{LabelClass, LabelStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelDecision {
    Fake,
    NonFake,
    Unlabeled,
    /// URLs carried both definitive labels; the cascade leaves the dataset.
    Discarded,
}

/// Label assigned to one cascade, with the URLs it traces back to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeLabel {
    pub cascade_id: String,
    pub decision: LabelDecision,
    /// URLs whose store labels produced a definitive decision.
    pub provenance: Vec<String>,
}

/// Assign each cascade the unique definitive label among its URLs.
///
/// Exactly one of {fake, non-fake} present -> that label. Both present ->
/// discarded. Neither (unknown or unlabeled URLs only) -> unlabeled.
pub fn transfer_labels(cascades: &[Cascade], store: &LabelStore) -> Vec<CascadeLabel> {
    cascades
        .iter()
        .map(|cascade| {
            let mut fake_urls = Vec::new();
            let mut non_fake_urls = Vec::new();
            for url in &cascade.urls {
                match store.get(url).map(|l| l.label) {
                    Some(LabelClass::Fake) => fake_urls.push(url.clone()),
                    Some(LabelClass::NonFake) => non_fake_urls.push(url.clone()),
                    Some(LabelClass::Unknown) | None => {}
                }
            }
            let (decision, provenance) = match (fake_urls.is_empty(), non_fake_urls.is_empty()) {
                (false, false) => {
                    fake_urls.extend(non_fake_urls);
                    (LabelDecision::Discarded, fake_urls)
                }
                (false, true) => (LabelDecision::Fake, fake_urls),
                (true, false) => (LabelDecision::NonFake, non_fake_urls),
                (true, true) => (LabelDecision::Unlabeled, Vec::new()),
            };
            CascadeLabel {
                cascade_id: cascade.id().to_string(),
                decision,
                provenance,
            }
        })
        .collect()
}
