# Configuration file for the Sphinx documentation builder.
#
# This file only contains a selection of the most common options. For a full
# list see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

import os.path

# Simulate import of the "tmnet" package
tmnet_module_path = os.path.join(os.path.dirname(__file__), "..", "tmnet", "__init__.py")
with open(tmnet_module_path, "rt", encoding="utf-8") as f:
    tmnet = type("", (), {})()
    exec(f.read(), tmnet.__dict__)


# -- Project information -----------------------------------------------------

project = tmnet.NAME
author = tmnet.AUTHOR
copyright = "2026, " + author

version = tmnet.VERSION
release = tmnet.VERSION


# -- General configuration ---------------------------------------------------

extensions = []
templates_path = []
source_suffix = ".rst"
master_doc = "index"
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]
smartquotes_action = "qe"

primary_domain = None
highlight_language = "none"

language = "en"


# -- Options for HTML output -------------------------------------------------

html_theme = "alabaster"
html_theme_options = {
    "description": tmnet.DESCRIPTION,
}
html_static_path = []

html_sidebars = {
    "*": [
        "about.html",
        "navigation.html",
        "relations.html",
        "searchbox.html",
    ],
}

html_domain_indices = False


# -- Options for manual page output ------------------------------------------

# (source start file, name, description, authors, manual section).
man_pages = [
    (
        "man/tmnet",
        "tmnet",
        "Task-driven modular networks command line interface",
        [author],
        1,
    ),
    (
        "man/tmnet-train",
        "tmnet-train",
        "Train a compositional zero-shot model",
        [author],
        1,
    ),
    (
        "man/tmnet-eval",
        "tmnet-eval",
        "Evaluate, inspect and query a trained model",
        [author],
        1,
    ),
]
