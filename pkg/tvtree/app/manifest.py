"""
Contains the application manifest of the tvtree application.
"""

import tvtree.apptk as apptk

manifest = apptk.ApplicationManifest()
