"""linkforge: record-linkage toolkit for building sociocentric social networks.

Links census-enumerated residents to free-text named contacts within a
community, then assembles the matched pairs into directed, domain-labeled
social graphs with summary statistics and assortative-mixing analysis.
"""

__version__ = "0.1.0"
