"""
Rudimentary application model for command line applications based on `argparse`.

An application consists of `Command`s, which become the subcommands of the command line, and `Service`s, which are interfaces to
application wide shared resources like the user configuration or file codecs. All `Component` classes of an application have to be
inserted into an `ApplicationManifest` which is passed to an `Application` on startup.

Classes
-------
The only classes from which to inherit from are `Command` and `Service`.

Example
-------
The following code creates an application with a single subcommand `hello`.

>>> class HelloCommand(Command):
>>>     def execute(self, arguments) -> int:
>>>         print("hello")
>>>         return 0
>>> manifest = ApplicationManifest()
>>> manifest.insert(HelloCommand, "hello", help = "Prints hello.")
>>> Application(manifest, workingDirectory).run(["hello"])
"""

from argparse import ArgumentParser, Namespace
from collections import OrderedDict
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Type

import logging
import sys

COMPONENT_PROPERTY_NAMES = "name"
COMPONENT_PROPERTY_DISPLAY_NAME = "displayname"
COMPONENT_PROPERTY_GLOBAL = "_global"

COMPONENT_DEFAULT_PROPERTIES = {COMPONENT_PROPERTY_GLOBAL: False, COMPONENT_PROPERTY_DISPLAY_NAME: "Component"}

COMMAND_PROPERTY_HELP = "help"

COMMAND_DEFAULT_PROPERTIES = {COMMAND_PROPERTY_HELP: ""}

SERVICE_PROPERTY_MULTIPLE_INSTANCES = "multiple"

SERVICE_DEFAULT_PROPERTIES = {SERVICE_PROPERTY_MULTIPLE_INSTANCES: False}

EXIT_SUCCESS = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

logger = logging.getLogger("apptk")

class AppTkException(Exception):
    """ The base exception of the apptk module. """
    pass

class ApplicationManifestError(AppTkException):
    """ Exception related to application manifest failures. """
    pass

class ApplicationManifest:
    """ Defines the application components an application consists of.

    All `Component` classes which are part of the application have to be inserted in this manifest in order to use them at application runtime.
    """

    def __init__(self):
        self._components: Dict[Type, Dict[str, Any]] = OrderedDict()

    @property
    def Components(self) -> Iterable[Tuple[Type, Dict]]:
        """ All component-properties combinations. """
        return self._components.items()

    def getComponents(self, componentInterface) -> Iterable[Tuple[Type, Dict[str, Any]]]:
        """ Returns an `Iterable` of all component-properties combinations where the component is a subclass of the given component interface. """
        return filter(lambda componentTuple: issubclass(componentTuple[0], componentInterface), self.Components)

    def getComponentClasses(self, componentInterface: Type, name: str = None) -> List[Type]:
        """ Returns a `List` containing all component classes which implement the given component interface.
        If the given name is not `None` the component classes also had to be inserted with the specified name. """
        classes = list()
        for componentClass in self._components.keys():
            if issubclass(componentClass, componentInterface):
                properties = self.getProperties(componentClass)

                if name is None or COMPONENT_PROPERTY_NAMES in properties.keys() and name in properties[COMPONENT_PROPERTY_NAMES]:
                    classes.append(componentClass)
        return classes

    def getComponentClass(self, componentInterface: Type, name: str = None) -> Optional[Type]:
        """ Returns the first element or `None` of `ApplicationManifest.getComponentClasses`. """
        return next(iter(self.getComponentClasses(componentInterface, name)), None)

    @property
    def Commands(self) -> Iterable[Tuple[Type, Dict]]:
        """ All command-properties combinations. """
        return self.getComponents(Command)

    @property
    def Services(self) -> Iterable[Tuple[Type, Dict]]:
        """ All service-properties combinations. """
        return self.getComponents(Service)

    def isAvailable(self, componentInterface: Type, name: str = None) -> bool:
        """ Returns if there is a component which implements the given interface and has the given name. """
        return self.getComponentClass(componentInterface, name) is not None

    def insert(self, componentClass: Type, *names: str, **componentProperties):
        """ Inserts a new component into or updates an existing component of the manifest.

        Parameters
        ----------
        names: `Sequence[str]` (default: `[]`)
            the names under which the component should be registered. The first name of a command is its subcommand name.
        componentProperties: `Dict` (The default properties are component dependent)
            the properties under which the component should be registered, may include custom key-value pairs

        Component Properties
        --------------------
        _global: `bool` (default: `False`)
            Global services only exist in the application's context. Requests from sub contexts are redirected to it.
        displayname: `str` (default: `"Component"`)
            A descriptive name of the component
        help: `str` (default: `""`), command only
            The help text of the subcommand.
        multiple: bool (default: `False`), service only
            Whether a new service is created on every request or an existing one is requested again.
        """
        if not issubclass(componentClass, Component):
            raise ApplicationManifestError("Can't insert class '{0}' since it's not of required type '{1}'.".format(componentClass, Component))

        properties = dict() if componentClass not in self._components else self._components[componentClass]

        if not properties:
            properties.update(COMPONENT_DEFAULT_PROPERTIES)

            if issubclass(componentClass, Command):
                properties.update(COMMAND_DEFAULT_PROPERTIES)
            elif issubclass(componentClass, Service):
                properties.update(SERVICE_DEFAULT_PROPERTIES)

        if names:
            properties[COMPONENT_PROPERTY_NAMES] = names

        if componentProperties:
            properties.update(componentProperties)

        self._components[componentClass] = properties

    def getProperties(self, componentClass: Type) -> Dict[str, Any]:
        """ Returns the properties of the given component. Raises an exception if the component is not available. """
        if componentClass not in self._components.keys():
            raise ApplicationManifestError("Can't retrieve the configuration of unknown component '{0}'.".format(componentClass))

        return self._components[componentClass]

    def getNames(self, componentClass: Type) -> Optional[Sequence[str]]:
        """ Returns the names under which the given component has been inserted. If there are no names `None` is returned. """
        return self.getProperties(componentClass).get(COMPONENT_PROPERTY_NAMES, None)

class ApplicationRunError(AppTkException):
    """ Exception related to application run failures. """
    pass

class Application:
    """ Represents a command line application based on the apptk module.

    An application always needs an `ApplicationManifest` and a working directory (usually the directory of the launcher script). Every
    inserted `Command` becomes a subcommand of the application's argument parser. A run parses the arguments, creates the application's
    `ApplicationContext`, executes the selected command and destroys the context again, which stops all services requested during the run.

    Override `_configureParser`, `_onParsed` and `_exitCode` to add global options and to map exceptions to exit codes.
    """

    def __init__(self, applicationManifest: ApplicationManifest, workingDirectory: Path, programName: str = None, description: str = None):
        self._applicationManifest = applicationManifest
        self._workingDirectory = Path(workingDirectory)
        self._programName = programName
        self._description = description

        self._context: Optional[ApplicationContext] = None
        self._arguments: Optional[Namespace] = None
        self._output = None

    @property
    def IsRunning(self) -> bool:
        """ Whether the application is running or not. """
        return self._context is not None

    @property
    def WorkingDirectory(self) -> Path:
        """ The working directory of the application. """
        return self._workingDirectory

    @property
    def Manifest(self) -> ApplicationManifest:
        """ Returns the application's manifest. """
        return self._applicationManifest

    @property
    def Context(self):
        """ The root/application context. """
        return self._context

    @property
    def Arguments(self) -> Optional[Namespace]:
        """ The parsed arguments of the current run. """
        return self._arguments

    @property
    def Output(self):
        """ The text stream commands write their results to. """
        return self._output if self._output is not None else sys.stdout

    def createParser(self) -> ArgumentParser:
        """ Creates the argument parser with one subparser per inserted command. """
        parser = ArgumentParser(prog = self._programName, description = self._description)
        self._configureParser(parser)

        subparsers = parser.add_subparsers(dest = "command", metavar = "command")
        subparsers.required = True

        for commandClass, properties in self._applicationManifest.Commands:
            names = properties.get(COMPONENT_PROPERTY_NAMES, None)
            if not names:
                raise ApplicationManifestError("Command '{}' has been inserted without a subcommand name.".format(commandClass))

            subparser = subparsers.add_parser(names[0], aliases = list(names[1:]), help = properties.get(COMMAND_PROPERTY_HELP))
            subparser.set_defaults(commandClass = commandClass)
            commandClass.configureParser(subparser)

        return parser

    def run(self, argv: Sequence[str] = None, output = None) -> int:
        """ Parses the arguments, executes the selected command and returns its exit code. Throws an exception if the application
        is already running. """
        if self.IsRunning:
            raise ApplicationRunError("App is already running.")

        parser = self.createParser()
        try:
            self._arguments = parser.parse_args(argv)
        except SystemExit as ex:
            return ex.code if isinstance(ex.code, int) else EXIT_USAGE

        self._output = output
        self._context = ApplicationContext(self)
        try:
            self._onParsed(self._arguments)
            command = self._context.createCommand(self._arguments.commandClass)
            return command.execute(self._arguments)
        except Exception as ex:
            exitCode = self._exitCode(ex)
            logger.debug("Command failed with exit code %d.", exitCode, exc_info = ex)
            sys.stderr.write("{}: error: {}\n".format(parser.prog, ex))
            return exitCode
        finally:
            self.quit()

    def quit(self):
        """ Destroys the application context and all its components. """
        if self._context is not None:
            # prevent a second destruction from within a destroyed component
            context = self._context
            self._context = None
            context.destroy()
        self._output = None

    def _configureParser(self, parser: ArgumentParser):
        """ Adds global options to the main parser. """
        pass

    def _onParsed(self, arguments: Namespace):
        """ Called with the parsed arguments before the command is created. """
        pass

    def _exitCode(self, exception: Exception) -> int:
        """ Returns the exit code of a run which failed with the given exception. """
        return EXIT_FAILURE

class ComponentAvailabilityException(AppTkException):
    """ Base exception for errors regarding components which could not be requested or found. """
    pass

class ComponentNotOfRequiredTypeError(ComponentAvailabilityException):
    """ Component is not of required type. """
    pass

class ComponentNotFoundError(ComponentAvailabilityException):
    """ Component of specified properties has not been found. It might be no part of the application and hasn't been registered in the application's manifest. """
    pass

class Context:
    """ Holds, creates and gives access to all application components.

    A context is used to create commands and to request services. All components created in a context are bound to its lifecycle,
    which means if the context gets destroyed all components of it are going to be destroyed as well.
    """

    def __init__(self):
        self._components: List[Component] = list()

    @property
    def Application(self) -> Application:
        """ Returns the application. """
        raise NotImplementedError

    @property
    def _Services(self) -> Iterable:
        """ All started services in this context. """
        return filter(lambda component: isinstance(component, Service), self._components)

    def _onComponentDestroy(self, component):
        """ Called when a contained component of the context gets destroyed. """
        if component in self._components:
            self._components.remove(component)

    def _determineComponentClass(self, interface: Type, name: str = None, preferExisting: bool = True) -> Type:
        """ Determines the component class which has been registered in the application's manifest under the given name and implements
        the given interface. Classes of already existing components are preferred. """
        componentClasses = list()

        if preferExisting:
            for component in self._components:
                componentClass = type(component)
                if isinstance(component, interface) and self.Application.Manifest.isAvailable(componentClass, name) and componentClass not in componentClasses:
                    componentClasses.append(componentClass)

        if not componentClasses:
            componentClasses = self.Application.Manifest.getComponentClasses(interface, name)

        if not componentClasses:
            raise ComponentNotFoundError("Can't find any components for interface '{}' and name '{}'.".format(interface, name))

        return componentClasses[0]

    def createCommand(self, commandInterface: Type, commandName: str = None):
        """ Creates a new `Command` for the given interface and name which becomes part of this context. """
        commandClass = self._determineComponentClass(commandInterface, commandName, preferExisting = False)

        if not issubclass(commandClass, Command):
            raise ComponentNotOfRequiredTypeError("Found class '{}' for command interface '{}' and name '{}' but it's not of required class '{}'."
                .format(commandClass, commandInterface, commandName, Command))

        command = commandClass(self)
        self._components.append(command)
        command.onCreate()
        return command

    def requestService(self, serviceInterface: Type, serviceName: str = None, **requestProperties):
        """ Requests and returns a service with the given requestProperties and for the given interface and name. Creates a new service instance if needed.

        If the service allows multiple instances or hasn't been started yet a new service will be started, otherwise the existing will be requested again.
        If any exceptions occur during the request the service is considered as not working and will be stopped immediately. If the request succeeds
        the service becomes part of this context if it not already is.
        """
        serviceClass = self._determineComponentClass(serviceInterface, serviceName)

        if not issubclass(serviceClass, Service):
            raise ComponentNotOfRequiredTypeError("Found class '{}' for service interface '{}' and name '{}' but it's not of required class '{}'."
                .format(serviceClass, serviceInterface, serviceName, Service))

        serviceProperties = self.Application.Manifest.getProperties(serviceClass)
        service = next(filter(lambda service: isinstance(service, serviceClass), self._Services), None)

        if service is None and serviceProperties.get(COMPONENT_PROPERTY_GLOBAL) and self is not self.Application.Context:
            return self.Application.Context.requestService(serviceInterface, serviceName, **requestProperties)

        isNew = service is None or serviceProperties.get(SERVICE_PROPERTY_MULTIPLE_INSTANCES, SERVICE_DEFAULT_PROPERTIES[SERVICE_PROPERTY_MULTIPLE_INSTANCES])
        if isNew:
            service = serviceClass(self)

        try:
            service.onRequest(**requestProperties)

            if service not in self._components:
                self._components.append(service)
                service.onCreate()
        except Exception:
            service.stop()
            raise

        return service

    def requestAllServices(self, serviceInterface: Type, serviceName: str = None, **requestProperties) -> List:
        """ Requests all services which implement the given interface and are registered under the given name. See `Context.requestService`. """
        services = list()

        for serviceClass in self.Application.Manifest.getComponentClasses(serviceInterface, serviceName):
            services.append(self.requestService(serviceClass, serviceName, **requestProperties))

        return services

    def stopService(self, serviceInterface: Type, serviceName: str = None):
        """ Stops all services of the given service interface and name and removes them from the context. """
        for service in list(self._getServices(serviceInterface, serviceName)):
            service.stop()

    def isServiceRunning(self, serviceInterface: Type, serviceName: str = None) -> bool:
        """ Returns if there is any running service which implements the given service interface and has the given name. """
        return self._getService(serviceInterface, serviceName) is not None

    def destroy(self):
        """ Destroys all components of the context, the most recently created first. """
        for component in reversed(list(self._components)):
            try:
                component.destroy()
            except Exception as ex:
                logger.exception("Component '%s' could not be destroyed: %s", type(component).__name__, ex)
        self._components.clear()

    def _getServices(self, serviceInterface: Type, serviceName: str = None) -> Iterable:
        """ Returns all services which are currently part of the context and implement the given service interface and have the given name. No service request is made. """
        return filter(lambda service: isinstance(service, serviceInterface) and (serviceName is None or self.Application.Manifest.isAvailable(type(service), serviceName)), self._Services)

    def _getService(self, serviceInterface: Type, serviceName: str = None):
        """ Returns the first found service which is part of the context and implements the given service interface and has the given name. """
        return next(self._getServices(serviceInterface, serviceName), None)

class ApplicationContext(Context):
    """ Context of the application. Shall only be created by an `Application`. Highest/Toplevel Context. """

    def __init__(self, application: Application):
        super().__init__()

        self._application = application

    @property
    def Application(self) -> Application:
        return self._application

class SubContext(Context):
    """ Context of components which are bound to a different lifecycle than the application context's lifecycle. """

    def __init__(self, parentContext: Context):
        super().__init__()

        self._parentContext = parentContext

    @property
    def Application(self) -> Application:
        return self._parentContext.Application

class RequirementError(AppTkException):
    """ Exception related to component requirements. """
    pass

class IComponent:
    """ Application component interface implemented by all application components.

    Application components are contained in a certain context and have their own component context which allows them to request services "privately".
    """

    def getContext(self) -> Context:
        """ Returns the context which contains the component. """
        raise NotImplementedError

    def getComponentContext(self) -> Context:
        """ Returns the local context owned by the component. """
        raise NotImplementedError

    def require(self, componentClass: Type, componentName: str = None):
        """ Throws an exception if the given component class isn't inserted into the application's manifest under the given name.
        If the name is `None` it is ignored. """
        if not self.getContext().Application.Manifest.isAvailable(componentClass, componentName):
            raise RequirementError("Component '{0}' requires component '{1}' to function properly.".format(self.__class__, componentClass))

class Component(IComponent):
    """ Abstract application component base class. """

    def __init__(self, context: Context):
        self._context = context
        self._componentContext = SubContext(context)
        self._destroyed = False

    def getContext(self) -> Context:
        return self._context

    def getComponentContext(self) -> Context:
        return self._componentContext

    @property
    def IsDestroyed(self) -> bool:
        return self._destroyed

    def destroy(self):
        """ Destroys the component's own context, calls `Component.onDestroy` and removes the component from its context. """
        if self._destroyed:
            return
        self._destroyed = True
        self._componentContext.destroy()
        try:
            self.onDestroy()
        finally:
            self._context._onComponentDestroy(self)

    def onCreate(self):
        """ Called when the component has become part of its context. """
        pass

    def onDestroy(self):
        """ Called when the component is about to get destroyed inevitably. """
        pass

class Command(Component):
    """ A subcommand of the application.

    Commands declare their options in the class method `Command.configureParser` and do their work in `Command.execute`. A command is
    created in the application's context after the arguments have been parsed.

    Note
    ----
    Inherit directly from this class to create custom commands. The `__init__` signature shall never be changed.
    """

    @classmethod
    def configureParser(cls, parser: ArgumentParser):
        """ Adds the command's options to its subparser. """
        pass

    def execute(self, arguments: Namespace) -> int:
        """ Runs the command and returns its exit code. """
        raise NotImplementedError

class Service(Component):
    """ An interface to a specific functionality shared between all application components in the same context.

    A service is an application component which implements a unified interface to a specific functionality and can be accessed in the context it is
    or is going to be contained by calling `Context.requestService`. Every time the service has been requested the method `Service.onRequest` is
    called, even before `Component.onCreate` gets called.

    Note
    ----
    Inherit directly from this class to create custom services. The `__init__` signature shall never be changed.
    """

    def stop(self):
        """ Stops the service. """
        self.destroy()

    def onRequest(self, **requestProperties):
        """ Called every time the service has been requested. If the service can't serve its purpose anymore an exception should be raised. """
        pass
