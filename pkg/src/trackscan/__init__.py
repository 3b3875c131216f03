"""Static detection of third-party tracker hosts in Android app bytecode."""

__version__ = "0.1.0"

from .apk import ApkArchive, DexBlob, extract_dex_files, extract_manifest_permissions, open_apk
from .dex import (
    HostCandidate,
    decode_mutf8,
    encode_mutf8,
    extract_string_pool,
    parse_dex_header,
    scan_hosts_raw,
    scan_hosts_structured,
)
from .kb import (
    Company,
    TrackerKB,
    company_country,
    load_kb,
    load_kb_dir,
    resolve_company,
    root_parent,
    seed_kb,
    validate_kb,
)
from .matcher import AppProfile, match_candidate, normalize_host, profile_app
from .metrics import (
    Level,
    Ranking,
    descriptive_stats,
    gini,
    kendall_distance,
    pairwise_genre_distances,
    prevalence_table,
    ranking_from_prevalence,
    super_genre_map,
)
