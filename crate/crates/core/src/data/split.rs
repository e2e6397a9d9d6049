use super::{DomainDataset, Split};
use crate::error::{Error, Result};

/// Leave-one-domain-out partition: the user domain contributes its test
/// split, every other domain becomes a data center holding its train split.
/// Centers keep the input order.
pub fn leave_one_out_split(
    domains: &[DomainDataset],
    user_domain: &str,
) -> Result<(Vec<DomainDataset>, DomainDataset)> {
    if domains.len() < 2 {
        return Err(Error::Protocol(format!(
            "leave-one-out needs at least 2 domains, got {}",
            domains.len()
        )));
    }
    for (i, d) in domains.iter().enumerate() {
        if domains[..i].iter().any(|o| o.domain_id() == d.domain_id()) {
            return Err(Error::Protocol(format!(
                "duplicate domain `{}`",
                d.domain_id()
            )));
        }
    }
    let user = domains
        .iter()
        .find(|d| d.domain_id() == user_domain)
        .ok_or_else(|| Error::UnknownDomain(user_domain.to_string()))?
        .split_part(Split::Test);
    let centers = domains
        .iter()
        .filter(|d| d.domain_id() != user_domain)
        .map(|d| d.split_part(Split::Train))
        .collect();
    Ok((centers, user))
}
