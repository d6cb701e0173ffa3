from typing import List, Optional
import os

import matplotlib
import matplotlib.pyplot as plt


class PlotHelper():
    """
    Holds the style shared by the field figures: colours, colormaps, figure size and where figures are saved.
    """

    def __init__(
        self,
        colors: Optional[List[str]] = None,
        linestyles: Optional[List[str]] = None,
        scalar_cmap: str = "viridis",
        signed_cmap: str = "RdBu_r",
        output_format: str = "png",
        output_path: str = "./figures/",
        figsize: Optional[List[float]] = None,
    ) -> None:
        """
        scalar_cmap : string, optional
            Colormap for fields of one sign (pressure, speed, design).

        signed_cmap : string, optional
            Diverging colormap for sensitivities, centred on zero.

        output_format : string, optional
            The format of the saved figures.

        output_path : string, optional
            Prefix of the saved figures. If its base directory does not exist, it will be created.
        """

        if colors is None:
            colors = ["k", "r", "c", "m"]
        self._colors = colors

        if linestyles is None:
            linestyles = ["-", "--", "-.", ":"]
        self._linestyles = linestyles

        self._scalar_cmap = scalar_cmap
        self._signed_cmap = signed_cmap
        self._output_format = output_format
        self._output_path = output_path

        if figsize is None:
            figsize = [8.0, 7.0]
        self._figsize = figsize

        # If ``output_path`` is "directory/tag" then we create "directory/".
        directory = os.path.dirname(output_path)
        if directory and not os.path.exists(directory):
            os.makedirs(directory)

        matplotlib.rcdefaults()
        plt.rc("font", size=16)
        plt.rc("xtick", labelsize=12, direction="in")
        plt.rc("ytick", labelsize=12, direction="in")
        plt.rc("lines", linewidth=2.0)
        plt.rc("legend", numpoints=1, fontsize="large", handletextpad=0.1, handlelength=1.5)

    @property
    def colors(self) -> List[str]:
        """
        list of str : the colours used for line plots.
        """
        return self._colors

    @property
    def linestyles(self) -> List[str]:
        return self._linestyles

    @property
    def scalar_cmap(self) -> str:
        return self._scalar_cmap

    @property
    def signed_cmap(self) -> str:
        return self._signed_cmap

    @property
    def output_format(self) -> str:
        """
        str : the format figures will be saved as.
        """
        return self._output_format

    @property
    def output_path(self) -> str:
        """
        str : the prefix figures will be saved with.
        """
        return self._output_path

    @property
    def figsize(self) -> List[float]:
        return self._figsize

    def output_file(self, name: str) -> str:
        return f"{self._output_path}{name}.{self._output_format}"

    def adjust_legend(self, ax, location: str = "upper right", fontsize: int = 12, linewidth: int = 2):
        """
        Removes the legend frame and sets its text size and line widths.
        """

        legend = ax.legend(loc=location)
        legend.draw_frame(False)

        for t in legend.get_texts():
            t.set_fontsize(fontsize)

        # ``legendHandles`` was renamed in matplotlib 3.7.
        handles = getattr(legend, "legend_handles", None)
        if handles is None:
            handles = legend.legendHandles

        for handle in handles:
            handle.set_linewidth(linewidth)

        return ax
