# Configuration file for the Sphinx documentation builder.
#
# For the full list of built-in configuration values, see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Project information -----------------------------------------------------

project = "dgtwist: twists of glued spherical functors"
copyright = "2025, the dgtwist developers"
author = "the dgtwist developers"
release = "0.1"

# -- General configuration ---------------------------------------------------

extensions = [
    "autodoc2",
    "sphinx.ext.intersphinx",
    "numpydoc",
    "myst_parser",
    "sphinx_design",
]

autodoc2_packages = [
    "../src/exactlinalg.py",
    "../src/dgcat.py",
    "../src/twisted.py",
    "../src/certify.py",
    "../src/glued.py",
    "../src/spherical.py",
    "../src/catalogue.py",
    "../src/scenario.py",
    "../src/generate_report.py",
    "../src/dgtwist.py",
]
autodoc2_render_plugin = "myst"

myst_enable_extensions = [
    "amsmath",
    "colon_fence",
    "deflist",
    "dollarmath",
    "fieldlist",
    "linkify",
    "substitution",
]
myst_url_schemes = ["mailto", "http", "https"]

numfig = True
pygments_style = "sphinx"
suppress_warnings = ["myst.domains"]

templates_path = ["_templates"]
exclude_patterns = [
    ".DS_Store",
    "Thumbs.db",
    "_build",
]

today_fmt = "%c"


# -- Options for HTML output -------------------------------------------------

html_theme = "sphinx_book_theme"

html_theme_options = {
    "navigation_with_keys": True,
    "search_bar_text": "Search the docs...",
    "path_to_docs": "docs_src",
    "home_page_in_toc": True,
    "use_repository_button": False,
    "use_edit_page_button": False,
    "use_issues_button": False,
}
html_title = "dgtwist"
