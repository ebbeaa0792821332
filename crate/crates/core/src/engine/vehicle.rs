use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleCategory {
    ElV,
    Bicycle,
    PublicTransport,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VehicleProfile {
    pub id: String,
    pub category: VehicleCategory,
    pub label: String,
}

impl VehicleProfile {
    pub fn new(id: &str, category: VehicleCategory, label: &str) -> Self {
        VehicleProfile {
            id: id.to_string(),
            category,
            label: label.to_string(),
        }
    }

    /// Vehicles a player can pick when starting a session.
    pub fn catalog() -> Vec<VehicleProfile> {
        vec![
            VehicleProfile::new("el_scooter", VehicleCategory::ElV, "Electric scooter"),
            VehicleProfile::new("el_moped", VehicleCategory::ElV, "Electric moped"),
            VehicleProfile::new(
                "el_quadricycle",
                VehicleCategory::ElV,
                "Electric quadricycle",
            ),
            VehicleProfile::new("bicycle", VehicleCategory::Bicycle, "Bicycle"),
            VehicleProfile::new("bus", VehicleCategory::PublicTransport, "Public transport"),
            VehicleProfile::new("other", VehicleCategory::Other, "Other"),
        ]
    }

    pub fn find(id: &str) -> Option<VehicleProfile> {
        Self::catalog().into_iter().find(|v| v.id == id)
    }
}

impl Default for VehicleProfile {
    fn default() -> Self {
        VehicleProfile::new("other", VehicleCategory::Other, "Other")
    }
}
