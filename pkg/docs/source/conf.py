# Configuration file for the Sphinx documentation builder.
#
# For the full list of options see http://www.sphinx-doc.org/en/master/config

# -- Path setup --------------------------------------------------------------

import os
import re
import sys
sys.path.insert(0, os.path.abspath('../../'))


def get_version():
    version_file = os.path.join(os.path.abspath('../../'), 'porous_adjoint', '__version__.py')
    with open(version_file, 'r') as vf:
        return re.search(r"^_*version_* = ['\"]([^'\"]*)['\"]", vf.read(), re.M).group(1)


# -- Project information -----------------------------------------------------

project = 'porous-adjoint'
copyright = '2026, the porous-adjoint developers'
author = 'The porous-adjoint developers'

# The full version, including alpha/beta/rc tags
release = get_version()


# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.doctest',
    'sphinx.ext.todo',
    'sphinx.ext.coverage',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx.ext.napoleon',
    'sphinx.ext.intersphinx'
]
napoleon_use_param = False

# Intersphinx configuration
intersphinx_mapping = {'python': ('https://docs.python.org/3', None),
                       'numpy': ('https://numpy.org/doc/stable', None),
                       'scipy': ('https://docs.scipy.org/doc/scipy', None),
                       'matplotlib': ('https://matplotlib.org/stable', None),
                       'h5py': ('https://docs.h5py.org/en/stable', None)}

# Autodoc configuration
autodoc_default_options = {
    'members': None,
    "special-members": "__init__",
}
autodoc_member_order = 'groupwise'
autodoc_inherit_docstrings = False

templates_path = ['_templates']

source_suffix = '.rst'

# The master toctree document.
master_doc = 'index'

exclude_patterns = []

pygments_style = 'sphinx'


# -- Options for HTML output -------------------------------------------------

html_theme = 'sphinx_rtd_theme'

html_static_path = ['_static']


# -- Options for HTMLHelp output ---------------------------------------------

htmlhelp_basename = 'porous-adjointdoc'


# -- Options for LaTeX output ------------------------------------------------

latex_elements = {}

latex_documents = [
    (master_doc, 'porous-adjoint.tex', 'porous-adjoint Documentation', author, 'manual'),
]


# -- Options for manual page output ------------------------------------------

man_pages = [
    (master_doc, 'porous-adjoint', 'porous-adjoint Documentation', [author], 1)
]


# -- Options for Texinfo output ----------------------------------------------

texinfo_documents = [
    (master_doc, 'porous-adjoint', 'porous-adjoint Documentation',
     author, 'porous-adjoint', 'Adjoint sensitivities of the dissipation rate in porous media flow.',
     'Miscellaneous'),
]


# -- Options for todo extension ----------------------------------------------

todo_include_todos = True
