//! Seeded synthetic job corpus over the bundled skill vocabulary.
//!
//! Postings are drawn from domain clusters. Text only ever uses the display
//! name of a skill, so alternate surface forms (`k8s`, `sklearn`, ...) and
//! concept-only skills (`container-orchestration`, ...) stay out of the
//! corpus vocabulary and can be used for synonym queries.

use std::collections::BTreeSet;
use std::io::Write;

use jobmatch_core::skills::SkillSynonymTable;
use jobmatch_core::{CompanyRef, Degree, JobPosting, Level, Location, SkillId};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Cluster {
    pub name: &'static str,
    /// Domain skill required by most postings in the cluster.
    pub hub: &'static str,
    pub skills: &'static [&'static str],
    pub titles: &'static [&'static str],
    pub duties: &'static [&'static str],
    pub base_salary: f64,
    pub certifications: &'static [&'static str],
}

pub const GENERIC_SKILLS: &[&str] = &["git", "communication"];

pub const CLUSTERS: &[Cluster] = &[
    Cluster {
        name: "analytics",
        hub: "data-analysis",
        skills: &[
            "sql",
            "excel",
            "tableau",
            "power-bi",
            "statistics",
            "data-visualization",
            "looker",
        ],
        titles: &[
            "Data Analyst",
            "Reporting Analyst",
            "Tableau Developer",
            "Insights Analyst",
        ],
        duties: &[
            "Turn raw operational data into dashboards that leadership reviews every week.",
            "Partner with operations teams to define metrics and track them over time.",
        ],
        base_salary: 85_000.0,
        certifications: &[],
    },
    Cluster {
        name: "machine-learning",
        hub: "machine-learning",
        skills: &[
            "python",
            "deep-learning",
            "pytorch",
            "tensorflow",
            "scikit-learn",
            "nlp",
            "computer-vision",
        ],
        titles: &[
            "Machine Learning Engineer",
            "Data Scientist",
            "Applied Scientist",
            "Python Developer",
        ],
        duties: &[
            "Design, train and ship predictive models that power customer features.",
            "Run experiments, evaluate models offline and monitor them in production.",
        ],
        base_salary: 140_000.0,
        certifications: &[],
    },
    Cluster {
        name: "data-engineering",
        hub: "data-engineering",
        skills: &[
            "spark",
            "airflow",
            "kafka",
            "etl",
            "data-warehousing",
            "snowflake",
            "dbt",
            "hadoop",
        ],
        titles: &[
            "Data Engineer",
            "Analytics Engineer",
            "Data Platform Engineer",
        ],
        duties: &[
            "Build reliable batch and streaming pipelines feeding the company warehouse.",
            "Own data quality checks and the scheduling of nightly loads.",
        ],
        base_salary: 130_000.0,
        certifications: &[],
    },
    Cluster {
        name: "devops",
        hub: "devops",
        skills: &[
            "kubernetes",
            "docker",
            "terraform",
            "aws",
            "ci-cd",
            "jenkins",
            "ansible",
            "linux",
        ],
        titles: &[
            "DevOps Engineer",
            "Site Reliability Engineer",
            "Cloud Engineer",
            "Platform Engineer",
        ],
        duties: &[
            "Keep production services available and automate deployments end to end.",
            "Run the cloud footprint, from networking to monitoring and on-call.",
        ],
        base_salary: 135_000.0,
        certifications: &["AWS Solutions Architect"],
    },
    Cluster {
        name: "backend",
        hub: "backend-development",
        skills: &[
            "java",
            "spring",
            "golang",
            "microservices",
            "rest-api",
            "postgresql",
            "redis",
            "nodejs",
        ],
        titles: &[
            "Backend Engineer",
            "Java Developer",
            "Software Engineer",
            "Backend Developer",
        ],
        duties: &[
            "Design and operate the services behind our public platform.",
            "Write well tested server code and review the designs of peers.",
        ],
        base_salary: 130_000.0,
        certifications: &[],
    },
    Cluster {
        name: "frontend",
        hub: "frontend-development",
        skills: &[
            "javascript",
            "typescript",
            "react",
            "angular",
            "vue",
            "css",
            "html",
        ],
        titles: &[
            "Frontend Developer",
            "React Developer",
            "Web Developer",
            "UI Engineer",
        ],
        duties: &[
            "Build accessible, fast web interfaces used by thousands of customers.",
            "Work closely with designers to turn mockups into polished screens.",
        ],
        base_salary: 115_000.0,
        certifications: &[],
    },
    Cluster {
        name: "mobile",
        hub: "mobile-development",
        skills: &[
            "swift",
            "kotlin",
            "ios",
            "android",
            "react-native",
            "flutter",
            "dart",
        ],
        titles: &[
            "Mobile Developer",
            "iOS Engineer",
            "Android Engineer",
            "App Developer",
        ],
        duties: &[
            "Ship features to our phone apps on a two week release train.",
            "Improve app stability, startup time and offline behavior.",
        ],
        base_salary: 125_000.0,
        certifications: &[],
    },
    Cluster {
        name: "security",
        hub: "cybersecurity",
        skills: &[
            "penetration-testing",
            "siem",
            "network-security",
            "incident-response",
            "vulnerability-assessment",
            "firewalls",
        ],
        titles: &[
            "Security Analyst",
            "Security Engineer",
            "Penetration Tester",
            "SOC Analyst",
        ],
        duties: &[
            "Protect company systems and respond when alerts fire.",
            "Assess exposure across the network and drive remediation with owners.",
        ],
        base_salary: 120_000.0,
        certifications: &["CISSP", "Security+"],
    },
    Cluster {
        name: "finance",
        hub: "financial-analysis",
        skills: &[
            "financial-modeling",
            "accounting",
            "gaap",
            "valuation",
            "forecasting",
            "quickbooks",
            "auditing",
            "excel",
        ],
        titles: &[
            "Financial Analyst",
            "Accountant",
            "FP&A Analyst",
            "Staff Accountant",
        ],
        duties: &[
            "Prepare monthly close packages and explain variances to management.",
            "Support budgeting and planning cycles across business units.",
        ],
        base_salary: 90_000.0,
        certifications: &["CPA"],
    },
    Cluster {
        name: "marketing",
        hub: "digital-marketing",
        skills: &[
            "seo",
            "google-analytics",
            "content-marketing",
            "social-media",
            "copywriting",
            "email-marketing",
            "hubspot",
        ],
        titles: &[
            "Digital Marketing Specialist",
            "Marketing Manager",
            "SEO Specialist",
            "Content Strategist",
        ],
        duties: &[
            "Plan campaigns that grow our audience and measure what works.",
            "Own the editorial calendar and brand voice across channels.",
        ],
        base_salary: 80_000.0,
        certifications: &[],
    },
    Cluster {
        name: "product",
        hub: "product-management",
        skills: &[
            "agile",
            "scrum",
            "jira",
            "roadmapping",
            "stakeholder-management",
            "user-research",
        ],
        titles: &[
            "Product Manager",
            "Product Owner",
            "Scrum Master",
            "Technical Program Manager",
        ],
        duties: &[
            "Decide what the team builds next and why, backed by customer evidence.",
            "Run planning rituals and keep partners informed of progress.",
        ],
        base_salary: 135_000.0,
        certifications: &["PMP"],
    },
];

/// (name, industry, size)
pub const COMPANIES: &[(&str, &str, &str)] = &[
    ("Hudson Analytics", "technology", "medium"),
    ("Empire Health Partners", "healthcare", "large"),
    ("Lenox Capital", "finance", "medium"),
    ("Gotham Retail Group", "retail", "enterprise"),
    ("Brightline Media", "media", "small"),
    ("Harbor Logistics", "logistics", "large"),
    ("Atlas Insurance", "insurance", "enterprise"),
    ("Northwind Software", "technology", "small"),
    ("Palisade Energy", "energy", "large"),
    ("Union Square Labs", "technology", "small"),
    ("Meridian Bank", "finance", "enterprise"),
    ("Cobalt Education", "education", "medium"),
    ("Riverside Hospital", "healthcare", "enterprise"),
    ("Kestrel Games", "media", "medium"),
    ("Beacon Civic Tech", "government", "small"),
    ("Summit Consulting", "consulting", "medium"),
];

/// (city, state)
pub const CITIES: &[(&str, &str)] = &[
    ("New York", "NY"),
    ("Brooklyn", "NY"),
    ("Queens", "NY"),
    ("Bronx", "NY"),
    ("Albany", "NY"),
    ("Buffalo", "NY"),
    ("Jersey City", "NJ"),
    ("Newark", "NJ"),
    ("Hoboken", "NJ"),
    ("Princeton", "NJ"),
    ("Stamford", "CT"),
    ("Hartford", "CT"),
    ("New Haven", "CT"),
];

fn sample_skills(rng: &mut ChaCha8Rng, pool: &[&str], n: usize) -> Vec<SkillId> {
    pool.choose_multiple(rng, n.min(pool.len()))
        .map(|s| SkillId::new(*s))
        .collect()
}

fn names(ids: &[SkillId], table: &SkillSynonymTable) -> String {
    let names: Vec<&str> = ids.iter().map(|s| table.display_name(s)).collect();
    match names.as_slice() {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn round_thousand(v: f64) -> f64 {
    (v / 1000.0).round() * 1000.0
}

/// Generates `n` postings. The same `(n, seed)` always yields the same corpus.
pub fn generate_corpus(n: usize, seed: u64, table: &SkillSynonymTable) -> Vec<JobPosting> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| generate_posting(i, &mut rng, table))
        .collect()
}

fn generate_posting(i: usize, rng: &mut ChaCha8Rng, table: &SkillSynonymTable) -> JobPosting {
    let cluster = &CLUSTERS[rng.random_range(0..CLUSTERS.len())];
    let roll: f64 = rng.random();
    let seniority = match roll {
        r if r < 0.25 => Level::Junior,
        r if r < 0.60 => Level::Mid,
        r if r < 0.90 => Level::Senior,
        _ => Level::Unknown,
    };
    let base_title = *cluster.titles.choose(rng).expect("titles are non-empty");
    let title = match seniority {
        Level::Junior => format!("Junior {base_title}"),
        Level::Senior => format!(
            "{} {base_title}",
            ["Senior", "Lead"].choose(rng).expect("non-empty")
        ),
        _ => base_title.to_string(),
    };

    let mut required = Vec::new();
    if rng.random_bool(0.8) {
        required.push(SkillId::new(cluster.hub));
    }
    let n_required = rng.random_range(3..=4);
    let mut pool: Vec<&str> = cluster.skills.to_vec();
    pool.shuffle(rng);
    required.extend(pool.iter().take(n_required).map(|s| SkillId::new(*s)));
    let n_preferred = rng.random_range(1..=2);
    let mut preferred: Vec<SkillId> = pool
        .iter()
        .skip(n_required)
        .take(n_preferred)
        .map(|s| SkillId::new(*s))
        .collect();
    if rng.random_bool(0.25) {
        preferred.extend(sample_skills(rng, GENERIC_SKILLS, 1));
    }
    if rng.random_bool(0.15) {
        let other = &CLUSTERS[rng.random_range(0..CLUSTERS.len())];
        if other.name != cluster.name {
            preferred.extend(sample_skills(rng, other.skills, 1));
        }
    }
    let required_set: BTreeSet<SkillId> = required.iter().cloned().collect();
    preferred.retain(|s| !required_set.contains(s));

    let location_roll: f64 = rng.random();
    let (city, state) = *CITIES.choose(rng).expect("non-empty");
    let location = if location_roll < 0.10 {
        Location::remote()
    } else {
        Location {
            city: Some(city.to_string()),
            state: Some(state.to_string()),
            remote_allowed: location_roll < 0.20,
        }
    };

    let (company, industry, size) = *COMPANIES.choose(rng).expect("non-empty");
    let level_factor = match seniority {
        Level::Junior => 0.7,
        Level::Mid => 1.0,
        Level::Senior => 1.35,
        Level::Unknown => 1.0,
    };
    let midpoint = cluster.base_salary * level_factor * rng.random_range(0.9..1.1);
    let (salary_min, salary_max) = if rng.random_bool(0.1) {
        (None, None)
    } else {
        (
            Some(round_thousand(midpoint * 0.85)),
            Some(round_thousand(midpoint * 1.15)),
        )
    };

    let degree = match (seniority, rng.random_range(0..10)) {
        (_, 0) => Degree::None,
        (Level::Senior, 1..=3) => Degree::Master,
        (_, 9) if cluster.name == "machine-learning" => Degree::Doctorate,
        _ => Degree::Bachelor,
    };
    let certifications: BTreeSet<String> =
        if !cluster.certifications.is_empty() && rng.random_bool(0.2) {
            cluster
                .certifications
                .choose(rng)
                .map(|c| c.to_string())
                .into_iter()
                .collect()
        } else {
            BTreeSet::new()
        };
    let visa_sponsorship = rng.random_bool(0.3);

    let years = match seniority {
        Level::Junior => Some(rng.random_range(0..=1)),
        Level::Mid => Some(rng.random_range(2..=4)),
        Level::Senior => Some(rng.random_range(5..=9)),
        Level::Unknown => None,
    };
    let place = match (&location.city, location.remote_allowed) {
        (Some(c), true) => format!("in {c} with flexible remote days"),
        (Some(c), false) => format!("in {c}"),
        (None, _) => "as a fully remote hire".to_string(),
    };
    let mut description = vec![
        format!("{company} is hiring a {title} {place}."),
        cluster.duties.choose(rng).expect("non-empty").to_string(),
        format!("You will work with {}.", names(&required, table)),
    ];
    if !preferred.is_empty() {
        description.push(format!(
            "Experience with {} is a plus.",
            names(&preferred, table)
        ));
    }
    if let Some(y) = years {
        if y > 0 {
            description.push(format!(
                "We are looking for {y}+ years of relevant experience."
            ));
        } else {
            description.push("Recent graduates are welcome to apply.".to_string());
        }
    }
    match degree {
        Degree::None => {}
        Degree::Bachelor => {
            description.push("A bachelor's degree or equivalent is required.".into())
        }
        Degree::Master => description.push("A master's degree is required.".into()),
        Degree::Doctorate => description.push("A PhD in a quantitative field is required.".into()),
    }
    if visa_sponsorship {
        description.push("Visa sponsorship is available.".into());
    }

    JobPosting {
        job_id: format!("syn-{:05}", i + 1),
        title,
        description: description.join(" "),
        required_skills: required_set,
        preferred_skills: preferred.into_iter().collect(),
        location,
        salary_min,
        salary_max,
        seniority,
        company: CompanyRef {
            name: company.to_string(),
            industry: Some(industry.to_string()),
            size: Some(size.to_string()),
        },
        degree_required: degree,
        visa_sponsorship,
        certifications_required: certifications,
    }
}

/// Writes postings as JSONL, one posting per line.
pub fn write_jsonl(postings: &[JobPosting], mut out: impl Write) -> std::io::Result<()> {
    for p in postings {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
