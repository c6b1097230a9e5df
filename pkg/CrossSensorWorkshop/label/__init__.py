# -*- coding: utf-8 -*-

__author__ = 'Bruce Frank Wong'


from .scheme import (
    SCHEME_CONFLICTS,
    BuiltinSchemes,
    builtin_schemes,
    get_scheme,
    get_recode_map,
    identity_map,
    recode,
    class_distribution,
    crosswalk,
    class_index_scheme,
    to_class_indices,
    from_class_indices,
    scheme_manifest,
    write_scheme_manifest,
)
