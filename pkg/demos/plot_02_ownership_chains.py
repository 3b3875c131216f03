"""
Walking corporate ownership chains
==================================

Tracker domains map to the company that operates them. Companies point at
their parents, so the full ownership chain can be followed up to a root.
"""

# %%
from trackscan import seed_kb
from trackscan.kb import company_country, resolve_company, root_parent
from trackscan.matcher import match_candidate

kb = seed_kb()
print("KB version:", kb.version, "|", len(kb.companies), "companies,", len(kb.domains), "domains")

# %%
# Each domain resolves to its immediate owner, then walks up to the root.
for domain in ("flurry.com", "admobi.us", "doubleclick.net", "crashlytics.com"):
    owner = resolve_company(kb, domain)
    chain = " -> ".join(kb.company(c).display_name for c in kb.ancestry(owner))
    print(f"{domain:18s} {chain}  [{company_country(kb, root_parent(kb, owner))}]")

# %%
# The match rule: a tracker domain must end at a boundary that is not a
# letter or a dot. Compat mode checks only that; strict mode also wants
# nothing but a dot (or nothing) on the left.
for text in ("google.com", "google.com/somepath", "google.com.domain", "google.coming",
             "notgoogle.com", "maps.google.com"):
    print(f"{text:22s} compat={match_candidate('google.com', text, paper_compat=True)!s:5s} "
          f"strict={match_candidate('google.com', text)}")
